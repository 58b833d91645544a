#pragma once

#include <filesystem>
#include <string>

#include "vortexglue/field_grid.hpp"

namespace vortexglue {

/// Writes `<stem>.bin` (little-endian float64, row-major, x fastest) and
/// `<stem>.json` (dims, spacing, frame, boundary, name). In the physical
/// frame the spacing is delta * h.
void write_field_snapshot(const ScalarField& field, const std::filesystem::path& stem,
                          Frame frame, const std::string& name);

struct FieldSnapshot {
  ScalarField field;
  Frame frame = Frame::Rescaled;
  std::string name;
};
FieldSnapshot read_field_snapshot(const std::filesystem::path& stem);

/// Row j of the field as CSV columns x,value.
void write_field_row_csv(const ScalarField& field, int row, const std::filesystem::path& path,
                         Frame frame);

}  // namespace vortexglue
