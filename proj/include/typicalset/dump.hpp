#pragma once

// Feature dump file (.batsdump), version 1.
//
//   offset 0   8 bytes   magic "BATSDUMP"
//   offset 8   u32 LE    format version (1)
//   offset 12  u32 LE    header length L in bytes
//   offset 16  L bytes   UTF-8 JSON header object:
//                          {"version","n","d","k","stage","has_labels","has_bn",
//                           "has_head","creator","payload_bytes"}
//   then, contiguous and in this order (f32/i32 little-endian):
//     features  f32 [n*d] row-major
//     bn_mu     f32 [d]    if has_bn
//     bn_sigma  f32 [d]    if has_bn
//     head_w    f32 [k*d]  if has_head, row-major
//     head_b    f32 [k]    if has_head
//     labels    i32 [n]    if has_labels
//
// The file ends exactly after the last payload. k is 0 when neither labels nor a
// head are present. Values are stored as float32; in memory they are doubles.

#include "typicalset/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace typicalset {

inline constexpr char kDumpMagic[8] = {'B', 'A', 'T', 'S', 'D', 'U', 'M', 'P'};
inline constexpr std::uint32_t kDumpVersion = 1;

struct FeatureDump {
    FeatureBatch batch;
    std::optional<BnChannelStats> stats;
    std::optional<LinearHead> head;
    std::size_t classes = 0;
    std::string creator;
};

std::vector<std::uint8_t> encode_dump(const FeatureBatch& batch, const BnChannelStats* stats,
                                      const LinearHead* head, std::size_t classes = 0,
                                      const std::string& creator = "typicalset");

FeatureDump decode_dump(const std::vector<std::uint8_t>& bytes);

// `classes` records K when labels are present but no head is; otherwise it is
// taken from the head.
void write_dump(const std::filesystem::path& path, const FeatureBatch& batch,
                const BnChannelStats* stats = nullptr, const LinearHead* head = nullptr,
                std::size_t classes = 0, const std::string& creator = "typicalset");

FeatureDump read_dump(const std::filesystem::path& path);

} // namespace typicalset
