#include "pflow/series_io.hpp"

#include "pflow/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace pflow {

namespace {

void put(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string energy_csv(const std::vector<DiagnosticsRecord>& records) {
  if (records.empty()) throw DomainError("energy_csv: empty record stream");
  std::string out = kEnergyHeader;
  out += '\n';
  for (const auto& r : records) {
    const double row[] = {r.time, r.total_energy, r.dissipation, r.sup_grad, r.bochner_linf, r.bochner_l2, r.w22_integral};
    for (std::size_t i = 0; i < std::size(row); ++i) {
      if (i) out += ',';
      put(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string phi_csv(const std::vector<PhiSample>& samples) {
  if (samples.empty()) throw DomainError("phi_csv: empty sample stream");
  const std::size_t n = samples.front().x.size();
  std::string out = "t";
  for (std::size_t a = 0; a < n; ++a) out += ",x" + std::to_string(a + 1);
  out += ",s,phi,dphi_exact,dphi_fd,tail\n";
  for (const auto& s : samples) {
    if (s.x.size() != n) throw DomainError("phi_csv: samples disagree on the dimension");
    put(out, s.t);
    for (double x : s.x) {
      out += ',';
      put(out, x);
    }
    for (double v : {s.s, s.value, s.exact_derivative, s.fd_derivative, s.tail_bound}) {
      out += ',';
      put(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

void export_series(const std::vector<DiagnosticsRecord>& records, const std::vector<PhiSample>& samples,
                   const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  write_text((std::filesystem::path(dir) / "energy.csv").string(), energy_csv(records));
  if (!samples.empty()) write_text((std::filesystem::path(dir) / "phi.csv").string(), phi_csv(samples));
}

}  // namespace pflow
