#pragma once

#include "pflow/flow.hpp"
#include "pflow/grid.hpp"
#include "pflow/params.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pflow {

enum class InitialKind { Constant, Fourier, RandomSmooth, EquivariantDegree1 };

struct InitialSpec {
  InitialKind kind = InitialKind::Constant;
  std::vector<double> q;          ///< constant value, also the base point of fourier / random_smooth
  int axis = 0;                   ///< fourier
  int mode = 1;                   ///< fourier
  double amplitude = 0.1;         ///< fourier and random_smooth
  std::vector<double> direction;  ///< fourier
  std::uint64_t seed = 1;         ///< random_smooth
  int modes = 4;                  ///< random_smooth cutoff |k|_inf
  std::vector<double> center;     ///< equivariant_degree1
  double scale = 0.1;             ///< equivariant_degree1 bubble size
};

struct DiagnosticsToggles {
  bool energy = true;
  bool bochner = true;
  bool w22 = true;
};

struct PhiScanSpec {
  std::vector<std::vector<double>> centers;  ///< empty: the origin
  std::vector<double> times;                 ///< empty: end of the run
  std::vector<double> scales;                ///< empty: dyadic over the valid range
  std::optional<double> eps0;                ///< empty: calibrated on smooth reference data
  int stride = 1;
  std::optional<double> t_begin;
  std::optional<double> t_end;
};

struct RunConfig {
  GridSpec grid;
  FlowParams flow;
  StepControl control;
  InitialSpec initial;
  DiagnosticsToggles diagnostics;
  PhiScanSpec phi;
  std::vector<double> k_list{10.0, 20.0, 40.0, 80.0};
  std::vector<double> radii;  ///< empty: three dyadic radii from the resolvable minimum
  double gamma = 0.5;         ///< witness cylinder radius as a fraction of sqrt(s*)
  std::string output_dir = "out";
};

/// Flat `section.key = value` text; `#` starts a comment. Lists are comma separated,
/// point lists separate points with `;`.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// ParseError carries the line, ValidationError the field.
RunConfig load_config(const std::string& path);

}  // namespace pflow
