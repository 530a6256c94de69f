#ifndef ICBPL_IO_HPP
#define ICBPL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icbpl/dataset.hpp"
#include "icbpl/geometry.hpp"
#include "icbpl/head.hpp"
#include "icbpl/neighbors.hpp"
#include "icbpl/trainer.hpp"

namespace icbpl {

// EMBD v1, all integers and floats little-endian:
//
//   offset  size  field
//   0       4     magic "EMBD"
//   4       2     u16 version (1)
//   6       1     u8 flags (0)
//   7       4     u32 N
//   11      4     u32 d
//   15      4     u32 V
//   19      4*N*d*(1+V)  float32 payload, originals then view 0..V-1, row-major
//   ...     4     u32 CRC-32 (zlib polynomial) of every preceding byte
inline constexpr std::size_t kEmbdHeaderSize = 19;
inline constexpr std::uint16_t kEmbdVersion = 1;

std::vector<std::uint8_t> encode_embd(const EmbeddingDataset& dataset);
EmbeddingDataset decode_embd(const std::vector<std::uint8_t>& bytes);

/// kCorruptFile on bad magic, version, size or CRC; kEmptyDataset for N = 0.
EmbeddingDataset read_embd(const std::filesystem::path& path);
/// Validates before opening the file; kIoError if it cannot be written.
void write_embd(const EmbeddingDataset& dataset, const std::filesystem::path& path);

/// Newline-delimited non-negative integers; blank lines are ignored.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<int>& labels, const std::filesystem::path& path);

// Neighbor tables and checkpoints share one framing: an 8-byte magic, a
// u32 little-endian header length, a UTF-8 JSON header, then the raw
// little-endian payload described by the header.

/// Payload is an N x M int32 array, row-major.
void write_neighbor_table(const NeighborTable& table, const std::filesystem::path& path);
NeighborTable read_neighbor_table(const std::filesystem::path& path);

/// Head parameters (per layer: weight out x in, then bias) followed by the
/// PEDCC centers, all float64.
struct Checkpoint {
    ProjectionHead head;
    PedccSet pedcc;
};

std::vector<std::uint8_t> encode_checkpoint(const ProjectionHead& head, const PedccSet& pedcc);
void save_checkpoint(const ProjectionHead& head, const PedccSet& pedcc, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// One JSON object per epoch ({"type":"epoch",...}) followed by a
/// {"type":"summary",...} line. Wall-clock times are left out so that
/// identical runs produce identical bytes; see format_timing_jsonl.
std::string format_report_jsonl(const TrainReport& report, const ClusterAssignment& assignment);
std::string format_timing_jsonl(const TrainReport& report);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

}  // namespace icbpl

#endif  // ICBPL_IO_HPP
