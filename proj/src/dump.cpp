#include "typicalset/dump.hpp"

#include "typicalset/error.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace typicalset {

namespace {

using json = nlohmann::json;

constexpr std::size_t kPreambleBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, double v, const char* section, std::size_t index) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) {
        throw DataError(std::string(section) + "[" + std::to_string(index) +
                        "] is not representable as a finite float32");
    }
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

void put_f32s(std::vector<std::uint8_t>& out, std::span<const double> values, const char* section) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        put_f32(out, values[i], section, i);
    }
}

// Sequential reader over the payload region.
class PayloadReader {
public:
    PayloadReader(const std::vector<std::uint8_t>& bytes, std::size_t offset)
        : bytes_(bytes), offset_(offset) {}

    std::vector<double> f32s(std::size_t count, const char* section) {
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            const float f = std::bit_cast<float>(get_u32(bytes_.data() + offset_));
            if (!std::isfinite(f)) {
                throw DataError(std::string(section) + "[" + std::to_string(i) +
                                "] is not finite (byte offset " + std::to_string(offset_) + ")");
            }
            out[i] = static_cast<double>(f);
            offset_ += 4;
        }
        return out;
    }

    std::vector<std::int32_t> i32s(std::size_t count) {
        std::vector<std::int32_t> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = std::bit_cast<std::int32_t>(get_u32(bytes_.data() + offset_));
            offset_ += 4;
        }
        return out;
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t offset_;
};

std::size_t header_size(const json& header, const char* key) {
    const auto it = header.find(key);
    if (it == header.end() || !it->is_number_unsigned()) {
        throw FormatError(std::string("header field '") + key +
                          "' is missing or not a nonnegative integer (offset " +
                          std::to_string(kPreambleBytes) + ")");
    }
    return it->get<std::size_t>();
}

bool header_flag(const json& header, const char* key) {
    const auto it = header.find(key);
    if (it == header.end() || !it->is_boolean()) {
        throw FormatError(std::string("header field '") + key + "' is missing or not a boolean");
    }
    return it->get<bool>();
}

std::size_t checked_mul(std::size_t a, std::size_t b) {
    if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
        throw CorruptionError("declared dimensions overflow");
    }
    return a * b;
}

} // namespace

std::vector<std::uint8_t> encode_dump(const FeatureBatch& batch, const BnChannelStats* stats,
                                      const LinearHead* head, std::size_t classes,
                                      const std::string& creator) {
    const std::size_t n = batch.size();
    const std::size_t d = batch.channels();
    if (stats && stats->channels() != d) {
        throw ShapeError("BN stats have " + std::to_string(stats->channels()) +
                         " channels, batch has " + std::to_string(d));
    }
    if (head) {
        if (head->channels() != d) {
            throw ShapeError("head expects d=" + std::to_string(head->channels()) +
                             ", batch has d=" + std::to_string(d));
        }
        if (classes != 0 && classes != head->classes()) {
            throw ShapeError("declared K=" + std::to_string(classes) + " disagrees with head K=" +
                             std::to_string(head->classes()));
        }
        classes = head->classes();
    }
    if (batch.labels()) {
        if (classes == 0) {
            throw ShapeError("a labelled dump needs K (from the head or given explicitly)");
        }
        require_labels_in_range(batch, classes);
    } else if (!head) {
        classes = 0;
    }
    if (stats) {
        for (std::size_t c = 0; c < d; ++c) {
            if (!(static_cast<float>(stats->sigma()[c]) > 0.0F)) {
                throw DataError("bn_sigma[" + std::to_string(c) +
                                "] must be > 0 after float32 conversion");
            }
        }
    }

    std::size_t payload = checked_mul(n, d) * 4;
    if (stats) payload += 2 * d * 4;
    if (head) payload += (checked_mul(classes, d) + classes) * 4;
    if (batch.labels()) payload += n * 4;

    json header = {
        {"version", kDumpVersion},
        {"n", n},
        {"d", d},
        {"k", classes},
        {"stage", std::string(to_string(batch.stage()))},
        {"has_labels", batch.labels().has_value()},
        {"has_bn", stats != nullptr},
        {"has_head", head != nullptr},
        {"creator", creator},
        {"payload_bytes", payload},
    };
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(kPreambleBytes + text.size() + payload);
    out.insert(out.end(), std::begin(kDumpMagic), std::end(kDumpMagic));
    put_u32(out, kDumpVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    put_f32s(out, batch.data().values(), "features");
    if (stats) {
        put_f32s(out, stats->mu(), "bn_mu");
        put_f32s(out, stats->sigma(), "bn_sigma");
    }
    if (head) {
        put_f32s(out, head->weights().values(), "head_w");
        put_f32s(out, head->bias(), "head_b");
    }
    if (batch.labels()) {
        for (std::int32_t y : *batch.labels()) {
            put_u32(out, std::bit_cast<std::uint32_t>(y));
        }
    }
    return out;
}

FeatureDump decode_dump(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof kDumpMagic ||
        std::memcmp(bytes.data(), kDumpMagic, sizeof kDumpMagic) != 0) {
        throw FormatError("bad magic at offset 0 (expected \"BATSDUMP\")");
    }
    if (bytes.size() < kPreambleBytes) {
        throw CorruptionError("file ends inside the preamble (" + std::to_string(bytes.size()) +
                              " bytes)");
    }
    const std::uint32_t version = get_u32(bytes.data() + 8);
    if (version != kDumpVersion) {
        throw UnsupportedVersionError("dump version " + std::to_string(version) +
                                      " at offset 8 is not supported; accepted versions: 1");
    }
    const std::uint32_t header_len = get_u32(bytes.data() + 12);
    if (bytes.size() - kPreambleBytes < header_len) {
        throw CorruptionError("header length " + std::to_string(header_len) +
                              " exceeds the file size");
    }
    json header;
    try {
        header = json::parse(bytes.begin() + kPreambleBytes,
                             bytes.begin() + kPreambleBytes + header_len);
    } catch (const json::parse_error& e) {
        throw FormatError("header at offset 16 is not valid JSON: " + std::string(e.what()));
    }
    if (!header.is_object()) {
        throw FormatError("header at offset 16 is not a JSON object");
    }
    if (header_size(header, "version") != kDumpVersion) {
        throw FormatError("header version disagrees with the preamble version");
    }
    const std::size_t n = header_size(header, "n");
    const std::size_t d = header_size(header, "d");
    const std::size_t k = header_size(header, "k");
    const bool has_labels = header_flag(header, "has_labels");
    const bool has_bn = header_flag(header, "has_bn");
    const bool has_head = header_flag(header, "has_head");
    const std::size_t declared = header_size(header, "payload_bytes");
    const auto stage_it = header.find("stage");
    if (stage_it == header.end() || !stage_it->is_string()) {
        throw FormatError("header field 'stage' is missing");
    }
    const std::string stage_name = stage_it->get<std::string>();
    Stage stage;
    if (stage_name == to_string(Stage::PreActivation)) {
        stage = Stage::PreActivation;
    } else if (stage_name == to_string(Stage::PostActivation)) {
        stage = Stage::PostActivation;
    } else {
        throw FormatError("unknown stage '" + stage_name + "'");
    }
    if (n == 0 || d == 0) {
        throw FormatError("header declares an empty batch (n=" + std::to_string(n) +
                          ", d=" + std::to_string(d) + ")");
    }
    if ((has_labels || has_head) && k < 2) {
        throw FormatError("header declares k=" + std::to_string(k) +
                          " but labels or a head need k >= 2");
    }

    std::size_t expected = checked_mul(n, d) * 4;
    if (has_bn) expected += 2 * d * 4;
    if (has_head) expected += (checked_mul(k, d) + k) * 4;
    if (has_labels) expected += n * 4;
    if (expected != declared) {
        throw CorruptionError("payload_bytes=" + std::to_string(declared) +
                              " disagrees with the declared shapes (" + std::to_string(expected) +
                              ")");
    }
    const std::size_t payload_offset = kPreambleBytes + header_len;
    const std::size_t available = bytes.size() - payload_offset;
    if (available != expected) {
        throw CorruptionError("payload holds " + std::to_string(available) + " bytes, header declares " +
                              std::to_string(expected));
    }

    PayloadReader reader(bytes, payload_offset);
    std::vector<double> features = reader.f32s(n * d, "features");
    std::optional<BnChannelStats> stats;
    if (has_bn) {
        auto mu = reader.f32s(d, "bn_mu");
        auto sigma = reader.f32s(d, "bn_sigma");
        stats.emplace(std::move(mu), std::move(sigma));
    }
    std::optional<LinearHead> head;
    if (has_head) {
        auto w = reader.f32s(k * d, "head_w");
        auto b = reader.f32s(k, "head_b");
        head.emplace(Matrix(k, d, std::move(w)), std::move(b));
    }
    std::optional<std::vector<std::int32_t>> labels;
    if (has_labels) {
        labels = reader.i32s(n);
    }
    FeatureBatch batch(Matrix(n, d, std::move(features)), stage, std::move(labels));
    require_labels_in_range(batch, k);

    const auto creator_it = header.find("creator");
    std::string creator =
        creator_it != header.end() && creator_it->is_string() ? creator_it->get<std::string>() : "";
    return FeatureDump{std::move(batch), std::move(stats), std::move(head), k, std::move(creator)};
}

void write_dump(const std::filesystem::path& path, const FeatureBatch& batch,
                const BnChannelStats* stats, const LinearHead* head, std::size_t classes,
                const std::string& creator) {
    const auto bytes = encode_dump(batch, stats, head, classes, creator);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

FeatureDump read_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_dump(bytes);
}

} // namespace typicalset
