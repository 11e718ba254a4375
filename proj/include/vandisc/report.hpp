#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace vandisc {

// One inequality measured <= bound.
struct Check {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool passed = true;
    std::string witness;

    double margin() const { return bound - measured; }
};

// Pass/fail evidence for one condition, with worst-case witnesses.
class ConditionReport {
public:
    explicit ConditionReport(std::string subject = {}) : subject_(std::move(subject)) {}

    // Records measured <= bound; NaN never passes.
    Check& require(std::string name, double measured, double bound, std::string witness = {});
    Check& record(Check check);
    // A finding worth surfacing that does not fail the report.
    void flag(std::string note) { notes_.push_back(std::move(note)); }
    void mark_not_applicable(std::string reason);
    void merge(const ConditionReport& other, const std::string& prefix);

    bool passed() const;
    bool not_applicable() const { return not_applicable_; }
    const std::string& subject() const { return subject_; }
    const std::vector<Check>& checks() const { return checks_; }
    const std::vector<std::string>& notes() const { return notes_; }
    const Check* find(const std::string& name) const;
    const Check* first_failure() const;

    nlohmann::json to_json() const;

private:
    std::string subject_;
    std::vector<Check> checks_;
    std::vector<std::string> notes_;
    bool not_applicable_ = false;
};

}  // namespace vandisc
