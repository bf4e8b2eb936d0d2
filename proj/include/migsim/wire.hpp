#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "migsim/core.hpp"

namespace migsim::wire {

/// Thrown by ByteReader on truncated or malformed input. Message handlers
/// catch it and treat the message as hostile garbage.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void blob(ByteView b);          // u32 length prefix + bytes
    void str(const std::string& s);
    void sealed(const crypto::SealedBox& box);

    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    Bytes blob();
    std::string str();
    crypto::SealedBox sealed();
    bool done() const { return pos_ == data_.size(); }
    void expect_done();

private:
    void need(std::size_t n);
    ByteView data_;
    std::size_t pos_ = 0;
};

enum class MsgKind : std::uint8_t {
    setup_request = 1,
    setup_response,
    setup_commit,
    setup_abort,
    migrate_request,
    metadata_transfer,
    metadata_reject,
    session_key_share,  // intra-cloud, sealed under the cloud's internal key
    token_delivery,     // intra-cloud, sealed under the cloud's internal key
    start_block,        // intra-cloud scheduler nudge
    read_request,
    read_reject,
    data_msg,
    ack_msg,
    block_stored_note,  // intra-cloud
};

const char* to_string(MsgKind k);

struct SetupRequest {
    SessionId session = 0;
    UserId user;
    crypto::SealedBox wrapped_key;  // migration key under derive_key(password, salt)
};
struct SetupResponse {
    SessionId session = 0;
    bool ok = false;
    std::string reason;
};
struct SetupCommit {
    SessionId session = 0;
};
struct SetupAbort {
    SessionId session = 0;
};
struct MigrateRequest {
    SessionId session = 0;
    crypto::SealedBox trigger;  // file id under the migration key; proves the user sent it
};
struct MetadataTransfer {
    SessionId session = 0;
    crypto::SealedBox sealed_metadata;
};
struct MetadataReject {
    SessionId session = 0;
    std::string reason;
};
struct SessionKeyShare {
    SessionId session = 0;
    crypto::SealedBox sealed_key;  // under the cloud-internal key
};
struct TokenDelivery {
    SessionId session = 0;
    RequestId request_id = 0;
    crypto::SealedBox sealed_routing;  // routing info under the cloud-internal key
    crypto::SealedBox sealed_token;    // the sealed capability, passed through opaque
};
struct StartBlock {
    SessionId session = 0;
    RequestId request_id = 0;
};
struct ReadRequest {
    SessionId session = 0;
    RequestId request_id = 0;
    BlockId block_id;
    NodeAddress reply_to;
    crypto::SealedBox sealed_token;
};
struct ReadReject {
    SessionId session = 0;
    RequestId request_id = 0;
    std::string reason;
};
struct DataMsg {
    SessionId session = 0;
    DataMsgBody body;
};
struct AckMsg {
    SessionId session = 0;
    AckMsgBody body;
};
struct BlockStoredNote {
    SessionId session = 0;
    RequestId request_id = 0;
    BlockId block_id;
    std::uint64_t block_bytes = 0;
};

using Message = std::variant<SetupRequest, SetupResponse, SetupCommit, SetupAbort,
                             MigrateRequest, MetadataTransfer, MetadataReject,
                             SessionKeyShare, TokenDelivery, StartBlock, ReadRequest,
                             ReadReject, DataMsg, AckMsg, BlockStoredNote>;

Bytes encode(const Message& msg);
Message decode(ByteView data);  // throws ParseError
MsgKind kind_of(const Message& msg);
MsgKind peek_kind(ByteView data);  // throws ParseError on empty/unknown

// Serialization helpers shared with sealed payload contents.
Bytes encode_block_id(const BlockId& id);
BlockId decode_block_id(ByteReader& r);
Bytes encode_metadata(const MetadataRecord& md);
MetadataRecord decode_metadata(ByteView data);  // throws ParseError
Bytes encode_token(const BlockAccessToken& t);
BlockAccessToken decode_token(ByteView data);  // throws ParseError

}  // namespace migsim::wire
