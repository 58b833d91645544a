#include "vortexglue/field_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vortexglue/errors.hpp"

namespace vortexglue {
namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

double to_little_endian(double v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  bits = __builtin_bswap64(bits);
  std::memcpy(&v, &bits, sizeof bits);
  return v;
}

const char* frame_name(Frame f) { return f == Frame::Physical ? "physical" : "rescaled"; }
const char* boundary_name(Boundary b) { return b == Boundary::Periodic ? "periodic" : "dirichlet"; }

}  // namespace

void write_field_snapshot(const ScalarField& field, const std::filesystem::path& stem, Frame frame,
                          const std::string& name) {
  const GridGeometry& g = field.geometry();
  const auto bin = with_suffix(stem, ".bin");
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw IoError("cannot write " + bin.string());
  std::vector<double> buffer(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) buffer[k] = to_little_endian(field[k]);
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(double)));
  if (!out) throw IoError("cannot write " + bin.string());

  const double scale = frame == Frame::Physical ? g.delta : 1.0;
  const double origin = g.boundary == Boundary::Periodic ? 0.0 : g.h * scale;
  nlohmann::ordered_json j;
  j["name"] = name;
  j["nx"] = g.nx;
  j["ny"] = g.ny;
  j["h"] = g.h * scale;
  j["origin"] = {origin, origin};
  j["frame"] = frame_name(frame);
  j["boundary"] = boundary_name(g.boundary);
  j["delta"] = g.delta;
  j["rescaled_h"] = g.h;
  j["dtype"] = "float64";
  j["byte_order"] = "little";
  j["layout"] = "row-major, x fastest";
  const auto hdr = with_suffix(stem, ".json");
  std::ofstream jout(hdr);
  if (!jout) throw IoError("cannot write " + hdr.string());
  jout << j.dump(2) << '\n';
  if (!jout) throw IoError("cannot write " + hdr.string());
}

FieldSnapshot read_field_snapshot(const std::filesystem::path& stem) {
  const auto hdr = with_suffix(stem, ".json");
  std::ifstream jin(hdr);
  if (!jin) throw IoError("cannot read " + hdr.string());
  nlohmann::json j;
  try {
    jin >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed field header " + hdr.string() + ": " + e.what());
  }
  GridGeometry g;
  FieldSnapshot snap;
  try {
    g.nx = j.at("nx").get<int>();
    g.ny = j.at("ny").get<int>();
    g.h = j.at("rescaled_h").get<double>();
    g.delta = j.at("delta").get<double>();
    g.boundary = j.at("boundary").get<std::string>() == "periodic" ? Boundary::Periodic : Boundary::Dirichlet;
    snap.frame = j.at("frame").get<std::string>() == "physical" ? Frame::Physical : Frame::Rescaled;
    snap.name = j.at("name").get<std::string>();
  } catch (const std::exception& e) {
    throw IoError("field header " + hdr.string() + " is missing fields: " + e.what());
  }
  snap.field = ScalarField(g);
  const auto bin = with_suffix(stem, ".bin");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw IoError("cannot read " + bin.string());
  in.read(reinterpret_cast<char*>(snap.field.data().data()),
          static_cast<std::streamsize>(g.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(g.size() * sizeof(double)))
    throw IoError("field payload " + bin.string() + " is truncated");
  for (double& v : snap.field.data()) v = to_little_endian(v);
  return snap;
}

void write_field_row_csv(const ScalarField& field, int row, const std::filesystem::path& path, Frame frame) {
  const GridGeometry& g = field.geometry();
  if (row < 0 || row >= g.ny) throw IoError("row out of range for CSV slice");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path.string());
  const double scale = frame == Frame::Physical ? g.delta : 1.0;
  std::fprintf(f, "x,value\n");
  for (int i = 0; i < g.nx; ++i) std::fprintf(f, "%.17g,%.17g\n", g.x(i) * scale, field(i, row));
  if (std::fclose(f) != 0) throw IoError("cannot write " + path.string());
}

}  // namespace vortexglue
