#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "migsim/bytes.hpp"
#include "migsim/crypto.hpp"
#include "migsim/sim_time.hpp"

namespace migsim {

using CloudId = std::string;
using NodeAddress = std::string;
using FileId = std::string;
using UserId = std::string;
using SessionId = std::uint64_t;
using RequestId = std::uint64_t;

/// User-generated symmetric migration key, delivered out of band to both
/// clouds during key setup and never sent in clear.
struct MigrationKey {
    std::uint64_t key_id = 0;
    Bytes material;  // exactly crypto::kKeySize bytes
};

struct BlockId {
    FileId file_id;
    std::uint32_t index = 0;

    auto operator<=>(const BlockId&) const = default;
    std::string to_string() const { return file_id + "#" + std::to_string(index); }
};

struct DataBlock {
    BlockId id;
    Bytes payload;
    bool owner_encrypted = false;
};

/// Name-node view of one file: block list plus, per block, the data node
/// that holds it (parallel arrays).
struct MetadataRecord {
    std::vector<BlockId> block_ids;
    std::vector<NodeAddress> datanode_addresses;
    std::uint64_t file_size = 0;
};

/// Target-minted capability authorizing one block read at the source.
/// Travels only inside an AEAD box sealed under the session key.
struct BlockAccessToken {
    BlockId block_id;
    NodeAddress target_datanode;
    RequestId request_id = 0;
    SimTime expiry = 0;
};

struct DataMsgBody {
    RequestId request_id = 0;
    BlockId block_id;
    Bytes data;
    Bytes nonce;  // 16 bytes, sent in clear; preimage input for the sealed hash
    crypto::SealedBox sealed_hash;
    std::uint32_t attempt = 1;
};

struct AckMsgBody {
    RequestId request_id = 0;
    crypto::SealedBox sealed_receipt;  // digest || block_id || request_id, sealed
};

struct Credentials {
    UserId user_id;
    Bytes password;
    Bytes salt;
};

constexpr std::size_t kDataNonceSize = 16;

}  // namespace migsim
