// Binary model container:
//   "AEE1" | u32 format_version | u64 n | n bytes architecture JSON
//   | u8 normalization | f64 target_lo | f64 target_hi
//   | encoder blobs | decoder blobs
// where each blob group is u64 count followed by (u64 n, n x f64) per
// parameter buffer. All integers and floats are little-endian.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aee/autoencoder.hpp"
#include "aee/errors.hpp"

namespace aee {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model files are written in native little-endian order");

constexpr char kMagic[4] = {'A', 'E', 'E', '1'};

class Writer {
public:
    template <typename T>
    void put(T value) {
        const auto* p = reinterpret_cast<const char*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_bytes(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    std::vector<char> take() { return std::move(bytes_); }

private:
    std::vector<char> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        T value;
        std::memcpy(&value, take(sizeof(T)), sizeof(T));
        return value;
    }
    const char* take(std::size_t n) {
        if (n > bytes_.size() - pos_) throw ParseError("model file is truncated");
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const char> bytes_;
    std::size_t pos_ = 0;
};

void write_blobs(Writer& w, const Network& net) {
    const auto params = net.parameters();
    w.put<std::uint64_t>(params.size());
    for (const auto& p : params) {
        w.put<std::uint64_t>(p.size());
        w.put_bytes(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(double));
    }
}

void read_blobs(Reader& r, Network& net, const char* which) {
    auto params = net.parameters();
    const auto count = r.get<std::uint64_t>();
    if (count != params.size()) {
        throw ParseError(std::string(which) + " parameter buffer count does not match architecture");
    }
    for (auto& p : params) {
        const auto n = r.get<std::uint64_t>();
        if (n != p.size()) {
            throw ParseError(std::string(which) + " parameter buffer size does not match architecture");
        }
        std::memcpy(p.data(), r.take(n * sizeof(double)), n * sizeof(double));
    }
}

}  // namespace

std::vector<char> serialize_model(const AEModel& model) {
    Writer w;
    w.put_bytes(kMagic, 4);
    w.put<std::uint32_t>(AEModel::kFormatVersion);
    nlohmann::json arch = {{"input_length", model.input_length}, {"config", model.config}};
    const std::string text = arch.dump();
    w.put<std::uint64_t>(text.size());
    w.put_bytes(text.data(), text.size());
    w.put<std::uint8_t>(model.config.normalization == Normalization::per_series ? 1 : 0);
    w.put<double>(0.0);
    w.put<double>(1.0);
    write_blobs(w, model.encoder);
    write_blobs(w, model.decoder);
    return w.take();
}

AEModel deserialize_model(std::span<const char> bytes) {
    Reader r(bytes);
    if (bytes.size() < 4 || std::memcmp(r.take(4), kMagic, 4) != 0) {
        throw ParseError("not a model file (bad magic bytes)");
    }
    const auto version = r.get<std::uint32_t>();
    if (version != AEModel::kFormatVersion) {
        throw VersionError("unsupported model format version " + std::to_string(version) +
                           " (this build reads version " +
                           std::to_string(AEModel::kFormatVersion) + ")");
    }
    const auto len = r.get<std::uint64_t>();
    const char* text = r.take(len);
    AEModel model;
    AEConfig config;
    std::size_t input_length = 0;
    try {
        const auto arch = nlohmann::json::parse(text, text + len);
        input_length = arch.at("input_length").get<std::size_t>();
        config = arch.at("config").get<AEConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("corrupt model architecture: ") + e.what());
    }
    const auto norm = r.get<std::uint8_t>();
    if (norm > 1) throw ParseError("corrupt normalization tag in model file");
    r.get<double>();
    r.get<double>();
    model = build_model(config, input_length, 0);
    read_blobs(r, model.encoder, "encoder");
    read_blobs(r, model.decoder, "decoder");
    if (!r.done()) throw ParseError("trailing bytes after model parameters");
    return model;
}

void save_model(const AEModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing model to '" + path.string() + "'");
}

AEModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace aee
