#include "qpath/cli/kink_file.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "qpath/error.hpp"

namespace qpath::cli {

namespace {

std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  return std::string(buf.data(), ptr);
}

template <typename Range, typename F>
void write_list(std::ostream& out, std::string_view key, const Range& items, F&& f) {
  out << key;
  for (const auto& item : items) out << ' ' << f(item);
  out << '\n';
}

void write_reals(std::ostream& out, std::string_view key, const Vector& v) {
  write_list(out, key, v, [](double x) { return fmt(x); });
}

void write_indices(std::ostream& out, std::string_view key, const IndexList& v) {
  write_list(out, key, v, [](std::size_t i) { return std::to_string(i); });
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Next line split into tokens; the first token must equal `key`.
  std::vector<std::string_view> expect(std::string_view key) {
    if (!std::getline(in_, line_)) fail("unexpected end of file, expected '" + std::string(key) + "'");
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    tokens_.clear();
    std::string_view view(line_);
    std::size_t pos = 0;
    while (pos < view.size()) {
      while (pos < view.size() && view[pos] == ' ') ++pos;
      const std::size_t start = pos;
      while (pos < view.size() && view[pos] != ' ') ++pos;
      if (pos > start) tokens_.push_back(view.substr(start, pos - start));
    }
    if (tokens_.empty() || tokens_[0] != key)
      fail("expected '" + std::string(key) + "'");
    return {tokens_.begin() + 1, tokens_.end()};
  }

  std::string_view single(std::string_view key) {
    auto rest = expect(key);
    if (rest.size() != 1) fail("'" + std::string(key) + "' takes exactly one value");
    return rest[0];
  }

  double real(std::string_view tok) {
    double v = 0.0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end) fail("invalid number '" + std::string(tok) + "'");
    return v;
  }

  std::size_t count(std::string_view tok) {
    std::size_t v = 0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end) fail("invalid count '" + std::string(tok) + "'");
    return v;
  }

  Vector reals(std::string_view key) {
    Vector out;
    for (auto tok : expect(key)) out.push_back(real(tok));
    return out;
  }

  IndexList indices(std::string_view key, std::size_t n) {
    IndexList out;
    for (auto tok : expect(key)) {
      const std::size_t i = count(tok);
      if (i >= n) fail("index " + std::to_string(i) + " out of range");
      if (!out.empty() && i <= out.back()) fail("indices must be strictly ascending");
      out.push_back(i);
    }
    return out;
  }

  void at_eof() {
    std::string extra;
    while (std::getline(in_, extra)) {
      ++line_no_;
      if (!extra.empty() && extra != "\r") fail("unexpected content after 'end'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_no_); }

 private:
  std::istream& in_;
  std::string line_;
  std::vector<std::string_view> tokens_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_kink_file(std::ostream& out, const KinkPath& path) {
  out << "qpath-kinks " << kKinkFormatVersion << '\n';
  out << "status " << (path.complete ? "COMPLETE" : "INCOMPLETE") << '\n';
  out << "lambda " << fmt(path.lambda) << '\n';
  out << "n " << path.n << '\n';
  out << "d " << path.d << '\n';
  out << "bias " << (path.bias ? 1 : 0) << '\n';
  out << "fingerprint " << path.fingerprint << '\n';
  out << "labels ";
  for (int y : path.labels) out << (y > 0 ? '+' : '-');
  out << '\n';
  out << "events " << path.events << '\n';
  out << "terminal_tau " << fmt(path.terminal_tau) << '\n';
  write_indices(out, "initial_L", path.initial_L);
  write_indices(out, "initial_M", path.initial_M);
  write_reals(out, "initial_alpha_M", path.initial_alpha_M);
  out << "kinks " << path.kinks.size() << '\n';
  for (const Kink& k : path.kinks) {
    out << "kink " << fmt(k.tau) << ' ' << to_string(k.event) << '\n';
    write_list(out, "moves", k.moves, [](const SetMove& m) {
      return std::to_string(m.index) + ':' + to_char(m.from) + to_char(m.to);
    });
    write_reals(out, "alpha_M", k.alpha_M);
    write_reals(out, "slope_M", k.slope_M);
  }
  out << "end\n";
}

std::string to_kink_text(const KinkPath& path) {
  std::ostringstream out;
  write_kink_file(out, path);
  return out.str();
}

void save_kink_file(const std::filesystem::path& file, const KinkPath& path) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  write_kink_file(out, path);
  if (!out) throw Error("failed writing " + file.string());
}

KinkPath parse_kink_file(std::istream& in) {
  Reader r(in);
  KinkPath path;

  const auto version = r.single("qpath-kinks");
  if (r.count(version) != static_cast<std::size_t>(kKinkFormatVersion))
    r.fail("unsupported kink file version " + std::string(version));
  const auto status = r.single("status");
  if (status == "COMPLETE")
    path.complete = true;
  else if (status != "INCOMPLETE")
    r.fail("status must be COMPLETE or INCOMPLETE");

  path.lambda = r.real(r.single("lambda"));
  if (!(path.lambda > 0.0)) r.fail("lambda must be positive");
  path.n = r.count(r.single("n"));
  if (path.n == 0) r.fail("n must be positive");
  path.d = r.count(r.single("d"));
  const auto bias = r.single("bias");
  if (bias != "0" && bias != "1") r.fail("bias must be 0 or 1");
  path.bias = bias == "1";
  path.fingerprint = std::string(r.single("fingerprint"));

  const auto labels = r.single("labels");
  if (labels.size() != path.n) r.fail("expected one label per instance");
  for (char ch : labels) {
    if (ch != '+' && ch != '-') r.fail("labels must be '+' or '-'");
    path.labels.push_back(ch == '+' ? 1 : -1);
  }
  path.events = r.count(r.single("events"));
  path.terminal_tau = r.real(r.single("terminal_tau"));

  path.initial_L = r.indices("initial_L", path.n);
  path.initial_M = r.indices("initial_M", path.n);
  path.initial_alpha_M = r.reals("initial_alpha_M");
  if (path.initial_alpha_M.size() != path.initial_M.size())
    r.fail("initial_alpha_M must have one value per initial_M index");
  {
    IndexList both;
    std::set_intersection(path.initial_L.begin(), path.initial_L.end(),
                          path.initial_M.begin(), path.initial_M.end(),
                          std::back_inserter(both));
    if (!both.empty()) r.fail("index " + std::to_string(both[0]) + " is in both L and M");
  }

  const std::size_t count = r.count(r.single("kinks"));
  std::vector<Membership> member = initial_membership(path);
  double prev_tau = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    auto head = r.expect("kink");
    if (head.size() != 2) r.fail("'kink' takes a tau and an event kind");
    Kink kink;
    kink.tau = r.real(head[0]);
    if (!(kink.tau >= prev_tau && kink.tau <= 1.0)) r.fail("kink taus must be ascending in [0, 1]");
    prev_tau = kink.tau;
    try {
      kink.event = event_kind_from_string(head[1]);
    } catch (const Error& e) {
      r.fail(e.what());
    }

    for (auto tok : r.expect("moves")) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || tok.size() != colon + 3)
        r.fail("set move must look like <index>:<from><to>");
      SetMove mv{};
      mv.index = r.count(tok.substr(0, colon));
      try {
        mv.from = membership_from_char(tok[colon + 1]);
        mv.to = membership_from_char(tok[colon + 2]);
      } catch (const Error& e) {
        r.fail(e.what());
      }
      kink.moves.push_back(mv);
    }
    try {
      apply_moves(member, kink.moves);
    } catch (const Error& e) {
      r.fail(e.what());
    }

    kink.alpha_M = r.reals("alpha_M");
    kink.slope_M = r.reals("slope_M");
    const auto m = static_cast<std::size_t>(std::count(member.begin(), member.end(), Membership::M));
    if (kink.alpha_M.size() != m || kink.slope_M.size() != m)
      r.fail("kink " + std::to_string(k) + " needs " + std::to_string(m) +
             " alpha_M and slope_M values");
    path.kinks.push_back(std::move(kink));
  }
  if (!r.expect("end").empty()) r.fail("'end' takes no values");
  r.at_eof();
  return path;
}

KinkPath parse_kink_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_kink_file(in);
}

KinkPath load_kink_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open kink file " + file.string());
  return parse_kink_file(in);
}

}  // namespace qpath::cli
