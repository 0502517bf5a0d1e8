#pragma once

#include <string>
#include <vector>

#include "ancov/config.hpp"
#include "ancov/mc.hpp"

namespace ancov {

// One flat result row: (quantity, packed parameter string, value, stderr).
struct Record {
    std::string quantity;
    std::string params;
    double value = 0;
    double stderr_ = std::numeric_limits<double>::quiet_NaN();
};

std::string records_to_csv(const std::vector<Record>& records);
std::string records_to_json(const std::vector<Record>& records);
std::string reports_to_csv(const std::vector<TestReport>& reports);
std::string reports_to_json(const std::vector<TestReport>& reports);

// Command implementations; these throw ConfigError / NumericError and return
// the records that the CLI writes out.
std::vector<Record> cmd_exact(const RunConfig& config);
std::vector<Record> cmd_simulate(const RunConfig& config);
std::vector<TestReport> cmd_verify(const RunConfig& config);
std::vector<Record> cmd_scan(const RunConfig& config);

// Exit codes: 0 ok, 1 verify failure, 2 config error, 3 numeric error.
int run_cli(int argc, const char* const* argv);

}  // namespace ancov
