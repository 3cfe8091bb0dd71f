#pragma once

#include "glaeser/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace glaeser {

/// Problem from the JSON problem-file format; omitted settings take their
/// defaults. Throws std::invalid_argument (schema), ParseError (formulas).
Problem parse_problem(const std::string& json_text);
Problem load_problem(const std::string& path);

/// Report document for a verdict, pretty-printed.
std::string report_json(const Problem& p, const Verdict& v);

/// Entry point of the glaeser tool; args excludes the program name.
/// Returns 0 Solvable, 1 Unsolvable, 2 Indeterminate, 3 on errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace glaeser
