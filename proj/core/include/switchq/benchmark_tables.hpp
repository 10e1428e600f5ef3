#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "switchq/closed_form_gbm.hpp"
#include "switchq/gaussian_quantizer.hpp"
#include "switchq/model.hpp"

namespace switchq {

struct Table1Case {
    int m = 10;
    double delta_inv = 10.0;  // 1/delta
    int n_quant = 10;
};

struct Table1Row {
    Table1Case params;
    double value = 0.0;
    double exact = 0.0;
    double rel_error_pct = 0.0;
    double seconds = 0.0;
};

struct Table2Case {
    int m = 10;
    int nbar = 100;
};

struct Table2Row {
    Table2Case params;
    std::uint64_t seed = 0;
    double value = 0.0;
    double exact = 0.0;
    double rel_error_pct = 0.0;
    double seconds = 0.0;
};

// Lattice-scheme sweep: for each (m, 1/delta, N) solves the finite-horizon
// benchmark on B(0, r_mult * x0) and reports the regime-2 value at (0, x0)
// against the closed form. Quantizers are cached across cases sharing N.
std::vector<Table1Row> run_table1(const GBMSwitchParams& params,
                                  const ClosedFormSolution& solution,
                                  const std::vector<Table1Case>& cases, double r_mult,
                                  std::uint64_t seed,
                                  std::size_t quant_samples = 0 /* 0 = auto */);

// Tree-scheme sweep: for each (m, nbar) and each seed trains marginal grids
// on n_train paths, estimates transitions on n_mc fresh paths and reports the
// regime-2 root value.
std::vector<Table2Row> run_table2(const GBMSwitchParams& params,
                                  const ClosedFormSolution& solution,
                                  const std::vector<Table2Case>& cases,
                                  std::size_t n_train, std::size_t n_mc,
                                  const std::vector<std::uint64_t>& seeds);

// CSV with columns mirroring the report tables:
//   m,delta_inv,n_quant,value,rel_error_pct,seconds
//   m,nbar,seed,value,rel_error_pct,seconds
void write_table1_csv(const std::vector<Table1Row>& rows, std::ostream& os);
void write_table2_csv(const std::vector<Table2Row>& rows, std::ostream& os);

// Default sweep grids for the two benchmark tables.
std::vector<Table1Case> default_table1_cases();
std::vector<Table2Case> default_table2_cases();

}  // namespace switchq
