#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "migsim/core.hpp"
#include "migsim/crypto.hpp"

namespace migsim {

class DuplicateFileError : public std::runtime_error {
public:
    explicit DuplicateFileError(const FileId& f)
        : std::runtime_error("duplicate file: " + f) {}
};
class MissingBlockError : public std::runtime_error {
public:
    explicit MissingBlockError(const BlockId& b)
        : std::runtime_error("missing block: " + b.to_string()) {}
};
class InvalidProofError : public std::runtime_error {
public:
    explicit InvalidProofError(const BlockId& b)
        : std::runtime_error("invalid deletion proof for block: " + b.to_string()) {}
};

/// Produced by the source data node when an acknowledgment opens under the
/// session key and matches the pending transfer. delete_block refuses
/// anything that does not line up with a receipt the node actually verified.
struct VerifiedAckEvidence {
    RequestId request_id = 0;
    BlockId block_id;
    crypto::Digest digest;
};

/// Source-side bookkeeping for one in-flight block transfer; lives from the
/// first send until the ack verifies or the retransmission bound trips.
struct RetransmitState {
    RequestId request_id = 0;
    BlockId block_id;
    std::uint32_t attempt = 1;
    SimTime timer_deadline = 0;
    crypto::Digest digest;
    Bytes nonce;
    crypto::SealedBox sealed_hash;  // reused verbatim on retransmit
    NodeAddress dest;
    SessionId session = 0;
};

struct Account {
    Bytes salt;
    Bytes wrap_key;  // derive_key(password, salt); verifier, not the password
};

struct NameNode {
    CloudId cloud_id;
    NodeAddress address;
    std::map<FileId, MetadataRecord> files;
    std::map<UserId, Account> accounts;
    std::map<SessionId, MigrationKey> session_keys;
    std::map<SessionId, MigrationKey> provisional_keys;  // held until setup commit
};

/// What a target data node keeps alongside a cached token: the sealed wire
/// form it will present, where to present it, and the owning session.
struct TokenRouting {
    crypto::SealedBox sealed_token;
    NodeAddress source_dn;
    SessionId session = 0;
};

struct DataNode {
    CloudId cloud_id;
    NodeAddress address;
    std::map<BlockId, DataBlock> blocks;
    std::map<SessionId, MigrationKey> session_keys;

    // target side
    std::map<RequestId, BlockAccessToken> token_cache;   // opened lazily at source
    std::map<RequestId, TokenRouting> token_routing;
    std::map<RequestId, Bytes> cached_acks;              // re-sent on duplicates
    std::map<RequestId, std::uint32_t> duplicate_counts;
    std::set<RequestId> dup_alerted;

    // source side
    std::map<RequestId, RetransmitState> pending;
    std::set<RequestId> completed_requests;
    std::map<RequestId, VerifiedAckEvidence> verified_acks;
};

struct Cluster {
    CloudId id;
    NameNode name_node;
    std::vector<DataNode> data_nodes;
    Bytes internal_key;  // seals intra-cloud control traffic

    DataNode* find_data_node(const NodeAddress& addr);
    const DataNode* node_holding(const BlockId& id) const;
};

/// Pure placement arithmetic: block i of a file goes to data node i % n.
struct BlockPlan {
    std::uint32_t block_count = 0;
    std::vector<std::uint32_t> node_for_block;  // index into cluster.data_nodes
};
BlockPlan plan_block_placement(std::uint64_t file_size, std::uint64_t block_size,
                               std::uint32_t data_node_count);

/// Splits payload into blocks round-robin across data nodes and registers
/// the metadata. An empty payload still produces one empty block.
MetadataRecord put_file(Cluster& cluster, const FileId& file_id, ByteView payload,
                        bool owner_encrypted, std::uint64_t block_size);

const DataBlock& read_block(const DataNode& node, const BlockId& id);

/// Removes the block. The evidence must match a receipt this node verified
/// for exactly this block, otherwise InvalidProofError and the block stays.
void delete_block(DataNode& node, const BlockId& id, const VerifiedAckEvidence& proof);

/// Canonically ordered cluster state report for golden-file comparison.
std::string dump_state(const Cluster& cluster);

}  // namespace migsim
