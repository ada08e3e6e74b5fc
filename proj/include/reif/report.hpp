#pragma once

#include "reif/examples_oracles.hpp"
#include "reif/reifenberg_cover.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace reif {

using json = nlohmann::json;

// Rounds to 12 significant digits so that dumps do not depend on the last
// bits of a computation. Non-finite values become null.
double sig12(double x);

// Objects are std::map backed, so keys come out sorted.
std::string dump_json(const json& j);

json space_to_json(const NormedSpace& space);
NormedSpace space_from_json(const json& j);

struct MeasureFile {
  NormedSpace space{1, Exponent::finite(2)};
  PointMeasure mu;
  std::vector<double> r_s;  // optional per-atom "r", 0 when absent
};

json measure_to_json(const NormedSpace& space, const PointMeasure& mu, const std::vector<double>& r_s = {});
MeasureFile measure_from_json(const json& j);

json plane_to_json(const AffinePlane& plane);
json ledger_to_json(const ConstantsLedger& ledger);
json label_to_json(const BallLabel& label);
json cover_to_json(const CoverResult& result);
json packing_to_json(const PackingResult& result);
json snowflake_to_json(const SnowflakeSpec& spec);

std::string dini_csv(const DiniProfile& profile);

}  // namespace reif
