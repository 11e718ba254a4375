#include "vandisc/report.hpp"

#include <nlohmann/json.hpp>

namespace vandisc {

Check& ConditionReport::require(std::string name, double measured, double bound, std::string witness)
{
    Check check{std::move(name), measured, bound, measured <= bound, std::move(witness)};
    return record(std::move(check));
}

Check& ConditionReport::record(Check check)
{
    checks_.push_back(std::move(check));
    return checks_.back();
}

void ConditionReport::mark_not_applicable(std::string reason)
{
    not_applicable_ = true;
    notes_.push_back("not applicable: " + std::move(reason));
}

void ConditionReport::merge(const ConditionReport& other, const std::string& prefix)
{
    for (Check check : other.checks_) {
        check.name = prefix + check.name;
        checks_.push_back(std::move(check));
    }
    for (const auto& note : other.notes_)
        notes_.push_back(prefix + note);
}

bool ConditionReport::passed() const
{
    return first_failure() == nullptr;
}

const Check* ConditionReport::find(const std::string& name) const
{
    for (const auto& check : checks_)
        if (check.name == name)
            return &check;
    return nullptr;
}

const Check* ConditionReport::first_failure() const
{
    for (const auto& check : checks_)
        if (!check.passed)
            return &check;
    return nullptr;
}

nlohmann::json ConditionReport::to_json() const
{
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& check : checks_) {
        nlohmann::json entry = {{"name", check.name},
                                {"measured", check.measured},
                                {"bound", check.bound},
                                {"margin", check.margin()},
                                {"passed", check.passed}};
        if (!check.witness.empty())
            entry["witness"] = check.witness;
        checks.push_back(std::move(entry));
    }
    return {{"subject", subject_},
            {"status", not_applicable_ ? "not_applicable" : passed() ? "pass" : "fail"},
            {"checks", std::move(checks)},
            {"notes", notes_}};
}

}  // namespace vandisc
