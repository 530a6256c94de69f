#include "icbpl/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <zlib.h>

#include <json.hpp>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

using json = nlohmann::json;

constexpr char kEmbdMagic[4] = {'E', 'M', 'B', 'D'};
constexpr char kNeighborMagic[8] = {'I', 'C', 'B', 'P', 'L', 'K', 'N', 'N'};
constexpr char kCheckpointMagic[8] = {'I', 'C', 'B', 'P', 'L', 'C', 'K', 'P'};

class ByteWriter {
public:
    void raw(const void* data, std::size_t size) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + size);
    }
    template <typename T>
    void le(T value) {
        using U = std::make_unsigned_t<T>;
        const U bits = static_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    void f32(float value) { le(std::bit_cast<std::uint32_t>(value)); }
    void f64(double value) { le(std::bit_cast<std::uint64_t>(value)); }

    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::size_t offset) : bytes_(bytes), offset_(offset) {}

    template <typename T>
    T le() {
        using U = std::make_unsigned_t<T>;
        need(sizeof(T));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(U(bytes_[offset_ + i]) << (8 * i));
        offset_ += sizeof(T);
        return static_cast<T>(bits);
    }
    float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::size_t offset() const { return offset_; }

private:
    void need(std::size_t n) const {
        if (offset_ + n > bytes_.size())
            fail(ErrorCode::kCorruptFile, "unexpected end of data at byte " + std::to_string(offset_));
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t offset_;
};

std::vector<std::uint8_t> frame(const char (&magic)[8], const json& header, const std::vector<std::uint8_t>& payload) {
    ByteWriter out;
    out.raw(magic, 8);
    const std::string text = header.dump();
    out.le(static_cast<std::uint32_t>(text.size()));
    out.raw(text.data(), text.size());
    out.raw(payload.data(), payload.size());
    return std::move(out.bytes());
}

// Returns the parsed header; *payload_offset points just past it.
json unframe(const char (&magic)[8], const std::vector<std::uint8_t>& bytes, const std::string& what,
             std::size_t* payload_offset) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), magic, 8) != 0)
        fail(ErrorCode::kCorruptFile, what + ": bad magic");
    ByteReader reader(bytes, 8);
    const auto length = reader.le<std::uint32_t>();
    if (12 + static_cast<std::size_t>(length) > bytes.size())
        fail(ErrorCode::kCorruptFile, what + ": header length exceeds file size");
    json header;
    try {
        header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + length);
    } catch (const json::exception& e) {
        fail(ErrorCode::kCorruptFile, what + ": unreadable JSON header (" + e.what() + ")");
    }
    *payload_offset = 12 + length;
    return header;
}

void write_matrix_f64(ByteWriter& out, const Matrix& m) {
    for (Index i = 0; i < m.size(); ++i) out.f64(m.data()[i]);
}

Matrix read_matrix_f64(ByteReader& in, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = in.f64();
    return m;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, std::numeric_limits<uInt>::max()));
        crc = ::crc32(crc, data, chunk);
        data += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string() + " for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kIoError, "failed writing " + path.string());
}

std::vector<std::uint8_t> encode_embd(const EmbeddingDataset& dataset) {
    dataset.validate();
    constexpr auto u32_max = std::numeric_limits<std::uint32_t>::max();
    require(dataset.size() <= u32_max && dataset.dim() <= u32_max && dataset.num_views() <= u32_max,
            ErrorCode::kInvalidArgument, "dataset dimensions exceed the EMBD u32 header fields");

    ByteWriter out;
    out.raw(kEmbdMagic, 4);
    out.le(kEmbdVersion);
    out.le(std::uint8_t{0});
    out.le(static_cast<std::uint32_t>(dataset.size()));
    out.le(static_cast<std::uint32_t>(dataset.dim()));
    out.le(static_cast<std::uint32_t>(dataset.num_views()));
    for (Index i = 0; i < dataset.data.size(); ++i) out.f32(dataset.data.data()[i]);
    for (const FloatMatrix& view : dataset.views)
        for (Index i = 0; i < view.size(); ++i) out.f32(view.data()[i]);
    out.le(crc32(out.bytes().data(), out.bytes().size()));
    return std::move(out.bytes());
}

EmbeddingDataset decode_embd(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kEmbdHeaderSize + 4)
        fail(ErrorCode::kCorruptFile, "file is " + std::to_string(bytes.size()) + " bytes, shorter than an EMBD header");
    if (std::memcmp(bytes.data(), kEmbdMagic, 4) != 0) fail(ErrorCode::kCorruptFile, "bad magic, expected 'EMBD'");

    ByteReader header(bytes, 4);
    const auto version = header.le<std::uint16_t>();
    if (version != kEmbdVersion)
        fail(ErrorCode::kCorruptFile, "unsupported EMBD version " + std::to_string(version));
    header.le<std::uint8_t>();  // flags, reserved
    const std::uint64_t n = header.le<std::uint32_t>();
    const std::uint64_t d = header.le<std::uint32_t>();
    const std::uint64_t v = header.le<std::uint32_t>();
    if (n == 0) fail(ErrorCode::kEmptyDataset, "EMBD file declares N = 0");

    const std::uint64_t payload = 4 * n * d * (1 + v);
    const std::uint64_t expected = kEmbdHeaderSize + payload + 4;
    if (bytes.size() != expected)
        fail(ErrorCode::kCorruptFile, "expected " + std::to_string(expected) + " bytes for N=" + std::to_string(n) +
                                          " d=" + std::to_string(d) + " V=" + std::to_string(v) + ", found " +
                                          std::to_string(bytes.size()));

    ByteReader trailer(bytes, bytes.size() - 4);
    const auto stored_crc = trailer.le<std::uint32_t>();
    if (stored_crc != crc32(bytes.data(), bytes.size() - 4)) fail(ErrorCode::kCorruptFile, "CRC-32 mismatch");

    EmbeddingDataset dataset;
    ByteReader in(bytes, kEmbdHeaderSize);
    const auto rows = static_cast<Index>(n);
    const auto cols = static_cast<Index>(d);
    dataset.data.resize(rows, cols);
    for (Index i = 0; i < dataset.data.size(); ++i) dataset.data.data()[i] = in.f32();
    dataset.views.resize(static_cast<std::size_t>(v));
    for (FloatMatrix& view : dataset.views) {
        view.resize(rows, cols);
        for (Index i = 0; i < view.size(); ++i) view.data()[i] = in.f32();
    }
    return dataset;
}

EmbeddingDataset read_embd(const std::filesystem::path& path) {
    try {
        return decode_embd(read_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::kIoError) throw;
        throw Error(e.code(), path.string() + ": " + std::string(e.what()).substr(to_string(e.code()).size() + 2));
    }
}

void write_embd(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
    write_file(path, encode_embd(dataset));
}

std::vector<int> read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string() + " for reading");
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const char* begin = line.data() + first;
        const char* end = line.data() + last + 1;
        int value = 0;
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end || value < 0)
            fail(ErrorCode::kInvalidArgument,
                 path.string() + ":" + std::to_string(line_no) + ": expected a non-negative integer label");
        labels.push_back(value);
    }
    return labels;
}

void write_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
    std::ostringstream text;
    for (int label : labels) text << label << '\n';
    const std::string s = text.str();
    write_file(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

void write_neighbor_table(const NeighborTable& table, const std::filesystem::path& path) {
    json header = {
        {"format", "icbpl-neighbors"},
        {"version", 1},
        {"rows", table.rows()},
        {"neighbors", table.neighbor_count()},
        {"metric", table.metric() == Metric::kCosine ? "cosine" : "euclidean"},
        {"built_at_epoch", table.built_at_epoch()},
        {"dtype", "int32-le"},
    };
    ByteWriter payload;
    for (std::int32_t index : table.indices()) payload.le(index);
    write_file(path, frame(kNeighborMagic, header, payload.bytes()));
}

NeighborTable read_neighbor_table(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    std::size_t offset = 0;
    const json header = unframe(kNeighborMagic, bytes, path.string(), &offset);
    try {
        const auto rows = header.at("rows").get<Index>();
        const auto m = header.at("neighbors").get<Index>();
        const std::string metric = header.at("metric").get<std::string>();
        if (rows < 0 || m < 0 || bytes.size() - offset != static_cast<std::size_t>(rows * m) * 4)
            fail(ErrorCode::kCorruptFile, path.string() + ": payload size does not match header");
        ByteReader in(bytes, offset);
        std::vector<std::int32_t> indices(static_cast<std::size_t>(rows * m));
        for (auto& index : indices) index = in.le<std::int32_t>();
        return NeighborTable(std::move(indices), rows, m, metric == "euclidean" ? Metric::kEuclidean : Metric::kCosine,
                             header.at("built_at_epoch").get<int>());
    } catch (const json::exception& e) {
        fail(ErrorCode::kCorruptFile, path.string() + ": malformed header (" + e.what() + ")");
    }
}

std::vector<std::uint8_t> encode_checkpoint(const ProjectionHead& head, const PedccSet& pedcc) {
    json blocks = json::array();
    ByteWriter payload;
    for (std::size_t l = 0; l < head.layers().size(); ++l) {
        const DenseLayer& layer = head.layers()[l];
        blocks.push_back({{"name", "layer" + std::to_string(l) + ".weight"},
                          {"shape", {layer.weight.rows(), layer.weight.cols()}}});
        blocks.push_back({{"name", "layer" + std::to_string(l) + ".bias"}, {"shape", {layer.bias.size()}}});
        write_matrix_f64(payload, layer.weight);
        for (Index i = 0; i < layer.bias.size(); ++i) payload.f64(layer.bias[i]);
    }
    blocks.push_back({{"name", "pedcc.centers"}, {"shape", {pedcc.num_centers(), pedcc.dim()}}});
    write_matrix_f64(payload, pedcc.centers());

    json header = {
        {"format", "icbpl-checkpoint"},
        {"version", 1},
        {"layer_dims", head.layer_dims()},
        {"activation", "relu"},
        {"output", "l2-normalize"},
        {"dtype", "float64-le"},
        {"blocks", blocks},
        {"pedcc", {{"num_centers", pedcc.num_centers()}, {"dim", pedcc.dim()}}},
    };
    header["pedcc"]["seed"] = pedcc.seed() ? json(*pedcc.seed()) : json(nullptr);
    return frame(kCheckpointMagic, header, payload.bytes());
}

void save_checkpoint(const ProjectionHead& head, const PedccSet& pedcc, const std::filesystem::path& path) {
    write_file(path, encode_checkpoint(head, pedcc));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    std::size_t offset = 0;
    const json header = unframe(kCheckpointMagic, bytes, path.string(), &offset);
    try {
        const auto dims = header.at("layer_dims").get<std::vector<int>>();
        const auto centers = header.at("pedcc").at("num_centers").get<Index>();
        const auto pedcc_dim = header.at("pedcc").at("dim").get<Index>();
        if (dims.size() < 2 || pedcc_dim != dims.back())
            fail(ErrorCode::kCorruptFile, path.string() + ": inconsistent layer/PEDCC dimensions");
        std::size_t doubles = static_cast<std::size_t>(centers * pedcc_dim);
        for (std::size_t l = 0; l + 1 < dims.size(); ++l)
            doubles += static_cast<std::size_t>(dims[l + 1]) * static_cast<std::size_t>(dims[l] + 1);
        if (bytes.size() - offset != doubles * 8)
            fail(ErrorCode::kCorruptFile, path.string() + ": expected " + std::to_string(doubles * 8) +
                                              " payload bytes, found " + std::to_string(bytes.size() - offset));

        ByteReader in(bytes, offset);
        std::vector<DenseLayer> layers;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            DenseLayer layer;
            layer.weight = read_matrix_f64(in, dims[l + 1], dims[l]);
            layer.bias.resize(dims[l + 1]);
            for (Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = in.f64();
            layers.push_back(std::move(layer));
        }
        Matrix center_rows = read_matrix_f64(in, centers, pedcc_dim);
        std::optional<std::uint64_t> seed;
        if (header.at("pedcc").contains("seed") && !header.at("pedcc").at("seed").is_null())
            seed = header.at("pedcc").at("seed").get<std::uint64_t>();
        return Checkpoint{ProjectionHead(std::move(layers)), PedccSet::from_centers(std::move(center_rows), seed)};
    } catch (const json::exception& e) {
        fail(ErrorCode::kCorruptFile, path.string() + ": malformed header (" + e.what() + ")");
    }
}

std::string format_report_jsonl(const TrainReport& report, const ClusterAssignment& assignment) {
    std::string out;
    for (const EpochRecord& r : report.epochs) {
        const json line = {
            {"type", "epoch"},
            {"epoch", r.epoch},
            {"loss1", r.loss.loss1},
            {"loss2", r.loss.loss2},
            {"loss3", r.loss.loss3},
            {"loss4", r.loss.loss4},
            {"total", r.loss.total},
            {"sigma", r.sigma},
            {"neighbors_refreshed", r.neighbors_refreshed},
            {"changed_fraction", r.changed_fraction},
        };
        out += line.dump() + "\n";
    }
    json summary = {
        {"type", "summary"},
        {"epochs", report.epochs.size()},
        {"early_stopped", report.early_stopped},
        {"refresh_epochs", report.refresh_epochs},
        {"counts", assignment.counts},
    };
    summary["acc"] = report.acc ? json(*report.acc) : json(nullptr);
    summary["nmi"] = report.nmi ? json(*report.nmi) : json(nullptr);
    out += summary.dump() + "\n";
    return out;
}

std::string format_timing_jsonl(const TrainReport& report) {
    std::string out;
    for (const EpochRecord& r : report.epochs) out += json{{"epoch", r.epoch}, {"seconds", r.seconds}}.dump() + "\n";
    return out;
}

}  // namespace icbpl
