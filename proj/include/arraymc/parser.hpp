#pragma once

#include <stdexcept>
#include <string>

#include "arraymc/smt.hpp"
#include "arraymc/system.hpp"

namespace arraymc {

/// Parse or sort-check failure, with source position when known.
class SpecError : public std::runtime_error {
 public:
  SpecError(int line, int col, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  explicit SpecError(const std::string& msg) : std::runtime_error(msg), line(0), col(0) {}
  int line, col;
};

/// Parse a system description; the result is fully sort-checked and every
/// case update's partition has been validated with the SMT engine.
SystemSpec parse_spec(const std::string& text);

/// Pretty-print a system back into the input grammar (parse ∘ print is the
/// identity up to structural equality).
std::string print_spec(const SystemSpec& spec);

bool spec_equal(const SystemSpec& a, const SystemSpec& b);

std::string print_formula(const Formula& f);

}  // namespace arraymc
