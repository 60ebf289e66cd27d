#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "qpath/path.hpp"

namespace qpath::cli {

inline constexpr int kKinkFormatVersion = 1;

/// Line-oriented text serialization of a KinkPath.
///
///   qpath-kinks 1
///   status COMPLETE|INCOMPLETE
///   lambda <real>
///   n <int>
///   d <int>
///   bias 0|1
///   fingerprint <hex>
///   labels <one '+' or '-' per instance>
///   events <int>
///   terminal_tau <real>
///   initial_L <indices...>
///   initial_M <indices...>
///   initial_alpha_M <reals...>
///   kinks <K>
///   then per kink:
///     kink <tau> <event>
///     moves <index>:<from><to> ...
///     alpha_M <reals...>
///     slope_M <reals...>
///   end
///
/// Reals use the shortest 17-significant-digit form, so reading a file and
/// writing it back reproduces it byte for byte.
void write_kink_file(std::ostream& out, const KinkPath& path);
std::string to_kink_text(const KinkPath& path);
void save_kink_file(const std::filesystem::path& file, const KinkPath& path);

/// Throws ParseError with the offending line number. Besides syntax it
/// checks that every set move matches the membership it is applied to and
/// that each kink carries one alpha_M/slope_M value per margin instance.
KinkPath parse_kink_file(std::istream& in);
KinkPath parse_kink_text(std::string_view text);
KinkPath load_kink_file(const std::filesystem::path& file);

}  // namespace qpath::cli
