#pragma once

#include "pflow/field.hpp"

#include <cstdint>

#include <string>
#include <vector>

namespace pflow {

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Binary layout (little-endian): "PFLW", u32 version, u32 n, u32 d,
/// n x u32 sizes, n x f64 lengths, f64 time, then the values row-major with d fastest.
std::vector<unsigned char> encode_snapshot(const FieldMap& field);
FieldMap decode_snapshot(const std::vector<unsigned char>& bytes);

void save_snapshot(const FieldMap& field, const std::string& path);
FieldMap load_snapshot(const std::string& path);

}  // namespace pflow
