#pragma once

#include <string>
#include <vector>

#include "fpe/entropy.hpp"
#include "fpe/integrate.hpp"
#include "fpe/systems.hpp"

namespace fpe {

// { "name", "X": [[[c,i,j],...],[[c,i,j],...]], "Y": ..., "f": [[c,i,j],...],
//   "domain": [xmin,xmax,ymin,ymax] }. Throws Error(Parse) on malformed input.
PiecewiseSystem parse_system_json(const std::string& text);
PiecewiseSystem load_system_file(const std::string& path);

std::string trajectories_to_json(const std::vector<SampledTrajectory>& set);
std::vector<SampledTrajectory> trajectories_from_json(const std::string& text);
// t,x,y,branch_id; one row per sample.
std::string trajectories_to_csv(const std::vector<SampledTrajectory>& set);

std::string report_to_json(const EntropyReport& r);
std::string report_to_csv(const EntropyReport& r);  // eps,n,span,sep

std::string witness_to_json(const WitnessReport& r, double J_lo, double J_hi);

// rho matrix: "RHOM", u32 count, u64 reserved, then count*count doubles,
// row-major, little-endian.
void write_rho_binary(const std::string& path, const std::vector<double>& rho, std::uint32_t count);
std::vector<double> read_rho_binary(const std::string& path, std::uint32_t& count);
std::string rho_to_csv(const std::vector<double>& rho, std::uint32_t count);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace fpe
