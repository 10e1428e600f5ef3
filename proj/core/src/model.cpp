#include "switchq/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace switchq {

namespace {

constexpr std::size_t kMaxIssues = 100;

void add_issue(ValidationReport& report, ValidationIssue issue) {
    report.passed = false;
    if (report.issues.size() < kMaxIssues) report.issues.push_back(std::move(issue));
}

}  // namespace

TimeGrid TimeGrid::make(double horizon, int steps) {
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    const double h = horizon / static_cast<double>(steps);
    if (h > 1.0) throw std::invalid_argument("TimeGrid: step h = T/m must be <= 1");
    return TimeGrid{steps, h, horizon};
}

ValidationReport validate_costs(const SwitchingModel& model,
                                const std::vector<Vec>& sample_points) {
    if (sample_points.empty())
        throw std::invalid_argument("validate_costs: sample_points must be nonempty");
    ValidationReport report;
    const int q = model.q;
    for (const Vec& x : sample_points) {
        for (int i = 0; i < q; ++i) {
            const double cii = model.switch_cost(x, i, i);
            report.max_diagonal = std::max(report.max_diagonal, std::abs(cii));
            if (std::abs(cii) > kStrictTol)
                add_issue(report, {"zero_diagonal", x, i, i, -1, cii});
            for (int j = 0; j < q; ++j) {
                if (j == i) continue;
                const double cij = model.switch_cost(x, i, j);
                report.min_cost = std::min(report.min_cost, cij);
                if (cij <= kStrictTol)
                    add_issue(report, {"positive_cost", x, i, j, -1, cij});
                for (int k = 0; k < q; ++k) {
                    if (k == j) continue;
                    const double slack =
                        cij + model.switch_cost(x, j, k) - model.switch_cost(x, i, k);
                    report.min_triangle = std::min(report.min_triangle, slack);
                    if (slack <= kStrictTol)
                        add_issue(report, {"triangular", x, i, j, k, slack});
                }
            }
        }
    }
    return report;
}

ValidationReport validate_terminal(const SwitchingModel& model,
                                   const std::vector<Vec>& sample_points) {
    if (sample_points.empty())
        throw std::invalid_argument("validate_terminal: sample_points must be nonempty");
    ValidationReport report;
    const int q = model.q;
    for (const Vec& x : sample_points) {
        for (int i = 0; i < q; ++i) {
            const double gi = model.terminal_gain(x, i);
            for (int j = 0; j < q; ++j) {
                if (j == i) continue;
                const double margin =
                    gi - (model.terminal_gain(x, j) - model.switch_cost(x, i, j));
                report.worst_margin = std::min(report.worst_margin, margin);
                if (margin < -kStrictTol)
                    add_issue(report, {"terminal_obstacle", x, i, j, -1, margin});
            }
        }
    }
    return report;
}

std::string describe(const ValidationReport& report) {
    std::string out = report.passed ? "PASS" : "FAIL";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  " min_cost=%.6g min_triangle=%.6g terminal_margin=%.6g",
                  report.min_cost, report.min_triangle, report.worst_margin);
    out += buf;
    for (const auto& issue : report.issues) {
        std::snprintf(buf, sizeof(buf), "\n  %s violated at i=%d j=%d%s margin=%.6g x=[",
                      issue.condition.c_str(), issue.i, issue.j,
                      issue.k >= 0 ? (" k=" + std::to_string(issue.k)).c_str() : "",
                      issue.margin);
        out += buf;
        for (int c = 0; c < issue.x.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%s%.6g", c ? ", " : "", issue.x[c]);
            out += buf;
        }
        out += "]";
    }
    return out;
}

}  // namespace switchq
