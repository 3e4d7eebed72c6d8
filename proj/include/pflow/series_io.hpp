#pragma once

#include "pflow/diagnostics.hpp"
#include "pflow/monotonicity.hpp"

#include <string>
#include <vector>

namespace pflow {

inline constexpr const char* kEnergyHeader = "t,E,dissipation,sup_grad,bochner_linf,bochner_l2,w22_integral";

/// CSV text with 17 significant digits. DomainError on an empty stream.
std::string energy_csv(const std::vector<DiagnosticsRecord>& records);
std::string phi_csv(const std::vector<PhiSample>& samples);

/// Writes energy.csv (and phi.csv when samples is non-empty) into dir. IoError on failure.
void export_series(const std::vector<DiagnosticsRecord>& records, const std::vector<PhiSample>& samples,
                   const std::string& dir);

void write_text(const std::string& path, const std::string& text);

}  // namespace pflow
