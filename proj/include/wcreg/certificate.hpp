#pragma once

#include <json.hpp>

#include <cstddef>
#include <string>

namespace wcreg {

/// One audited claim: a modulus, a bound radius, a solver guarantee. Serialised as
/// {name, claim, samples, worst_violation, pass}.
struct Certificate
{
  std::string name;
  std::string claim;
  std::size_t samples = 0;
  double worst_violation = 0.0;
  bool pass = false;
};

nlohmann::json to_json(const Certificate& c);

} // namespace wcreg
