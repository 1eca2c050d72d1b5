#include "natal_risk/schema.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "natal_risk/error.hpp"

namespace natal_risk {

std::string_view to_string(FactorGroup group) noexcept {
  switch (group) {
    case FactorGroup::MaternalAntepartum: return "maternal_antepartum";
    case FactorGroup::FetalAntepartum: return "fetal_antepartum";
    case FactorGroup::Intrapartum: return "intrapartum";
    case FactorGroup::Outcome: return "outcome";
  }
  return "";
}

std::string_view to_string(FactorKind kind) noexcept {
  return kind == FactorKind::Binary ? "binary" : "ordinal_binned";
}

std::optional<FactorGroup> parse_factor_group(std::string_view text) noexcept {
  for (auto g : {FactorGroup::MaternalAntepartum, FactorGroup::FetalAntepartum,
                 FactorGroup::Intrapartum, FactorGroup::Outcome}) {
    if (to_string(g) == text) return g;
  }
  return std::nullopt;
}

std::optional<FactorKind> parse_factor_kind(std::string_view text) noexcept {
  if (text == "binary") return FactorKind::Binary;
  if (text == "ordinal_binned") return FactorKind::OrdinalBinned;
  return std::nullopt;
}

std::string FactorDef::level_label(Level level) const {
  if (level == kMissing) return "";
  if (kind == FactorKind::Binary) return level == kPresent ? "present" : "absent";
  return bins.at(static_cast<std::size_t>(level));
}

std::vector<std::string> FactorDef::level_labels() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < cardinality(); ++i) out.push_back(level_label(static_cast<Level>(i)));
  return out;
}

std::optional<Level> parse_level(const FactorDef& def, std::string_view text) {
  if (def.kind == FactorKind::Binary) {
    if (text == "0" || text == "absent") return kAbsent;
    if (text == "1" || text == "present") return kPresent;
    return std::nullopt;
  }
  for (std::size_t i = 0; i < def.bins.size(); ++i) {
    if (def.bins[i] == text) return static_cast<Level>(i);
  }
  int rank = -1;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), rank);
  if (ec == std::errc{} && ptr == text.data() + text.size() && rank >= 0 &&
      static_cast<std::size_t>(rank) < def.bins.size()) {
    return static_cast<Level>(rank);
  }
  return std::nullopt;
}

namespace {

bool is_canonical_name(std::string_view name) {
  if (name.empty() || name.front() == '_' || name.back() == '_') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

}  // namespace

RiskFactorSchema::RiskFactorSchema(std::vector<FactorDef> factors, std::vector<FactorDef> outcomes)
    : factors_(std::move(factors)), outcomes_(std::move(outcomes)) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < variable_count(); ++i) {
    const auto& def = variable(i);
    if (!is_canonical_name(def.name)) throw Error(ErrorCode::InvalidSpec, "non-canonical name '" + def.name + "'");
    if (!seen.insert(def.name).second) throw Error(ErrorCode::InvalidSpec, "duplicate name '" + def.name + "'");
    if (def.kind == FactorKind::Binary && !def.bins.empty())
      throw Error(ErrorCode::InvalidSpec, "binary factor '" + def.name + "' declares bins");
    if (def.kind == FactorKind::OrdinalBinned && def.bins.size() < 2)
      throw Error(ErrorCode::InvalidSpec, "ordinal factor '" + def.name + "' needs at least two bins");
    if (is_outcome(i) != (def.group == FactorGroup::Outcome))
      throw Error(ErrorCode::InvalidSpec, "group of '" + def.name + "' does not match its list");
  }
}

const FactorDef& RiskFactorSchema::variable(std::size_t index) const {
  if (index < factors_.size()) return factors_[index];
  return outcomes_.at(index - factors_.size());
}

std::optional<std::size_t> RiskFactorSchema::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < variable_count(); ++i) {
    if (variable(i).name == name) return i;
  }
  return std::nullopt;
}

std::size_t RiskFactorSchema::index_of(std::string_view name) const {
  if (auto idx = find(name)) return *idx;
  throw Error(ErrorCode::UnknownName, std::string(name));
}

namespace {

FactorDef binary(std::string name, FactorGroup group, std::string label) {
  return FactorDef{std::move(name), group, FactorKind::Binary, {}, std::move(label)};
}

RiskFactorSchema make_builtin() {
  using G = FactorGroup;
  std::vector<FactorDef> factors = {
      binary("age_gt35", G::MaternalAntepartum, "Age > 35 years"),
      binary("previous_pathologies_or_smoking", G::MaternalAntepartum, "Previous pathologies or smoking"),
      binary("hypertension", G::MaternalAntepartum, "Hypertension"),
      binary("preeclampsia", G::MaternalAntepartum, "Preeclampsia"),
      binary("gbs_positive", G::MaternalAntepartum,
             "Vaginal swab/rinoculture positive for Streptococcus group B"),
      binary("torch_seroconversion", G::MaternalAntepartum, "TORCH seroconversion"),
      binary("gestational_diabetes", G::MaternalAntepartum, "Gestational diabetes"),
      binary("height_lt150", G::MaternalAntepartum, "Height < 150 cm"),
      binary("bmi_gt25", G::MaternalAntepartum, "BMI > 25"),
      binary("unfollowed_pregnancy", G::MaternalAntepartum, "Unfollowed pregnancy"),

      binary("major_malformations", G::FetalAntepartum, "Major malformations"),
      binary("iugr", G::FetalAntepartum, "IUGR"),
      binary("macrosomia", G::FetalAntepartum, "Macrosomia"),
      binary("oligohydramnios", G::FetalAntepartum, "Oligodramnios"),
      binary("polyhydramnios", G::FetalAntepartum, "Polidramnios"),
      binary("eg_lt37", G::FetalAntepartum, "EG < 37 weeks"),
      binary("eg_gt41", G::FetalAntepartum, "EG > 41 weeks"),
      FactorDef{"birth_weight", G::FetalAntepartum, FactorKind::OrdinalBinned,
                {"lt2500", "2500to4000", "gt4000"}, "Birth weight"},
      binary("twins", G::FetalAntepartum, "Twin pregnancy"),
      binary("fetal_anaemia", G::FetalAntepartum, "Foetal anaemia"),
      binary("no_steroid_prophylaxis", G::FetalAntepartum, "Lack of steroid prophylaxis in preterm"),
      binary("fetal_hydrops", G::FetalAntepartum, "Fetal hydrops"),

      binary("operative_delivery", G::Intrapartum, "Operative delivery with suction cup/forceps application"),
      binary("breech_vaginal_delivery", G::Intrapartum, "Vaginal delivery in the breech position"),
      binary("placenta_detachment", G::Intrapartum, "Placenta detachment"),
      binary("intrapartum_bleeding", G::Intrapartum, "Intrapartum bleeding"),
      binary("cord_prolapse_or_knot", G::Intrapartum, "Prolapse of funiculus / Cord knot"),
      binary("urgent_caesarean", G::Intrapartum, "Urgent caesarean section"),
      binary("fetal_cf_pattern_2_3", G::Intrapartum, "Fetal CF pattern type II - III"),
      binary("general_anaesthesia", G::Intrapartum, "General maternal anaesthesia"),
      binary("shoulder_dystocia", G::Intrapartum, "Shoulder dystocia"),
      binary("chorioamnionitis", G::Intrapartum, "Chorioamnionitis"),
      binary("meconium_stained_fluid", G::Intrapartum, "Amniotic fluid tinged with meconium"),
  };
  std::vector<FactorDef> outcomes = {
      binary("apgar1_leq7", G::Outcome, "APGAR score at 1 minute <= 7"),
      binary("ventilated_at_birth", G::Outcome, "Ventilated at birth"),
      binary("respiratory_distress", G::Outcome, "Respiratory distress after birth"),
      binary("nicu_transfer", G::Outcome, "Transferred to the NICU"),
      binary("neonatal_pathology_transfer", G::Outcome, "Transferred to Neonatal Pathology"),
      binary("brain_ultrasound_pathological", G::Outcome, "Pathological brain ultrasound"),
      binary("passive_hypothermia", G::Outcome, "Passive hypothermia while awaiting transport"),
      binary("niv_after_birth", G::Outcome, "NIV after birth (cPAP, HFNC)"),
  };
  return RiskFactorSchema(std::move(factors), std::move(outcomes));
}

nlohmann::json def_to_json(const FactorDef& def) {
  nlohmann::json j = {
      {"name", def.name},
      {"group", to_string(def.group)},
      {"kind", to_string(def.kind)},
      {"display_label", def.display_label},
  };
  if (def.kind == FactorKind::OrdinalBinned) j["bins"] = def.bins;
  return j;
}

FactorDef def_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, "factor entry is not an object");
  FactorDef def;
  try {
    def.name = j.at("name").get<std::string>();
    auto group = parse_factor_group(j.at("group").get<std::string>());
    auto kind = parse_factor_kind(j.at("kind").get<std::string>());
    if (!group || !kind) throw Error(ErrorCode::InvalidSpec, "bad group/kind for '" + def.name + "'");
    def.group = *group;
    def.kind = *kind;
    def.display_label = j.value("display_label", std::string{});
    if (j.contains("bins")) def.bins = j.at("bins").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  return def;
}

}  // namespace

const RiskFactorSchema& builtin_schema() {
  static const RiskFactorSchema schema = make_builtin();
  return schema;
}

nlohmann::json schema_to_json(const RiskFactorSchema& schema) {
  nlohmann::json factors = nlohmann::json::array();
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& f : schema.factors()) factors.push_back(def_to_json(f));
  for (const auto& f : schema.outcomes()) outcomes.push_back(def_to_json(f));
  return {{"format_version", kSchemaFormatVersion}, {"factors", factors}, {"outcomes", outcomes}};
}

RiskFactorSchema schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format_version", 0) != kSchemaFormatVersion)
    throw Error(ErrorCode::InvalidSpec, "schema document must have format_version 1");
  if (!doc.contains("factors") || !doc["factors"].is_array() || !doc.contains("outcomes") ||
      !doc["outcomes"].is_array())
    throw Error(ErrorCode::InvalidSpec, "schema document needs 'factors' and 'outcomes' arrays");
  std::vector<FactorDef> factors;
  std::vector<FactorDef> outcomes;
  for (const auto& j : doc["factors"]) factors.push_back(def_from_json(j));
  for (const auto& j : doc["outcomes"]) outcomes.push_back(def_from_json(j));
  return RiskFactorSchema(std::move(factors), std::move(outcomes));
}

}  // namespace natal_risk
