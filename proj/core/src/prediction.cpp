#include "natal_risk/prediction.hpp"

namespace natal_risk {

VariableInfo variable_info(const FactorDef& def) { return VariableInfo{def.name, def.level_labels()}; }

}  // namespace natal_risk
