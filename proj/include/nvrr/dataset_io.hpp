#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "nvrr/binio.hpp"
#include "nvrr/dataset.hpp"

namespace nvrr {

// Binary trajectory container, version 1:
//   "NVRRDS1\0"  magic
//   u32 manifest length, manifest JSON (canonical)
//   per trace: u8 label, u64 seed, u32 flip count,
//              flips as {u32 repetition, i8 from_mI, i8 to_mI},
//              counts as u16 x repetitions
// All integers little-endian. Round-trips bit-exactly.
inline constexpr const char kDatasetMagic[] = "NVRRDS1";

inline void save_dataset(std::ostream& out, const Dataset& ds) {
  binio::write_magic(out, std::string_view(kDatasetMagic, 8));
  const std::string manifest = ds.manifest.to_json().dump();
  binio::write_le<uint32_t>(out, static_cast<uint32_t>(manifest.size()));
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  for (const Trajectory& t : ds.traces) {
    binio::write_le<uint8_t>(out, static_cast<uint8_t>(t.label));
    binio::write_le<uint64_t>(out, t.seed);
    binio::write_le<uint32_t>(out, static_cast<uint32_t>(t.flips.size()));
    for (const FlipEvent& f : t.flips) {
      binio::write_le<uint32_t>(out, f.repetition);
      binio::write_le<int8_t>(out, f.from_mi);
      binio::write_le<int8_t>(out, f.to_mi);
    }
    for (const uint16_t c : t.counts) binio::write_le<uint16_t>(out, c);
  }
  if (!out) throw io_error("failed writing dataset stream");
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write dataset file: " + path);
  save_dataset(out, ds);
}

inline Dataset load_dataset(std::istream& in) {
  binio::expect_magic(in, std::string_view(kDatasetMagic, 8), "nvrr dataset");
  const uint32_t len = binio::read_le<uint32_t>(in);
  std::string manifest(len, '\0');
  in.read(manifest.data(), len);
  if (!in) throw io_error("truncated dataset manifest");
  Dataset ds;
  try {
    ds.manifest = DatasetManifest::from_json(nlohmann::json::parse(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("bad dataset manifest: ") + e.what());
  }
  ds.traces.resize(ds.manifest.n_traces);
  for (Trajectory& t : ds.traces) {
    const uint8_t label = binio::read_le<uint8_t>(in);
    if (label > 2) throw io_error("bad trace label in dataset");
    t.label = static_cast<Label>(label);
    t.seed = binio::read_le<uint64_t>(in);
    const uint32_t n_flips = binio::read_le<uint32_t>(in);
    t.flips.resize(n_flips);
    for (FlipEvent& f : t.flips) {
      f.repetition = binio::read_le<uint32_t>(in);
      f.from_mi = binio::read_le<int8_t>(in);
      f.to_mi = binio::read_le<int8_t>(in);
    }
    t.counts.resize(ds.manifest.repetitions);
    for (uint16_t& c : t.counts) c = binio::read_le<uint16_t>(in);
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open dataset file: " + path);
  return load_dataset(in);
}

// Flat CSV for external tools: one row per trace, label then per-repetition
// counts.
inline void export_dataset_csv(std::ostream& out, const Dataset& ds) {
  out << "label";
  for (int r = 0; r < ds.manifest.repetitions; ++r) out << ",c" << r;
  out << "\n";
  for (const Trajectory& t : ds.traces) {
    out << label_name(t.label);
    for (const uint16_t c : t.counts) out << ',' << c;
    out << "\n";
  }
}

inline void export_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write csv file: " + path);
  export_dataset_csv(out, ds);
  if (!out) throw io_error("failed writing csv file: " + path);
}

}  // namespace nvrr
