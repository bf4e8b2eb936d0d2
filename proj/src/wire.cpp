#include "migsim/wire.hpp"

namespace migsim::wire {

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::blob(ByteView b) {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
}

void ByteWriter::str(const std::string& s) {
    blob(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void ByteWriter::sealed(const crypto::SealedBox& box) {
    blob(box.nonce);
    blob(box.ciphertext);
    blob(box.tag);
}

void ByteReader::need(std::size_t n) {
    if (pos_ + n > data_.size()) throw ParseError("truncated message");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
}

Bytes ByteReader::blob() {
    std::uint32_t len = u32();
    need(len);
    Bytes out(data_.begin() + pos_, data_.begin() + pos_ + len);
    pos_ += len;
    return out;
}

std::string ByteReader::str() {
    Bytes b = blob();
    return std::string(b.begin(), b.end());
}

crypto::SealedBox ByteReader::sealed() {
    crypto::SealedBox box;
    box.nonce = blob();
    box.ciphertext = blob();
    box.tag = blob();
    return box;
}

void ByteReader::expect_done() {
    if (!done()) throw ParseError("trailing bytes");
}

const char* to_string(MsgKind k) {
    switch (k) {
        case MsgKind::setup_request: return "setup_request";
        case MsgKind::setup_response: return "setup_response";
        case MsgKind::setup_commit: return "setup_commit";
        case MsgKind::setup_abort: return "setup_abort";
        case MsgKind::migrate_request: return "migrate_request";
        case MsgKind::metadata_transfer: return "metadata_transfer";
        case MsgKind::metadata_reject: return "metadata_reject";
        case MsgKind::session_key_share: return "session_key_share";
        case MsgKind::token_delivery: return "token_delivery";
        case MsgKind::start_block: return "start_block";
        case MsgKind::read_request: return "read_request";
        case MsgKind::read_reject: return "read_reject";
        case MsgKind::data_msg: return "data_msg";
        case MsgKind::ack_msg: return "ack_msg";
        case MsgKind::block_stored_note: return "block_stored_note";
    }
    return "unknown";
}

Bytes encode_block_id(const BlockId& id) {
    ByteWriter w;
    w.str(id.file_id);
    w.u32(id.index);
    return w.take();
}

BlockId decode_block_id(ByteReader& r) {
    BlockId id;
    id.file_id = r.str();
    id.index = r.u32();
    return id;
}

Bytes encode_metadata(const MetadataRecord& md) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(md.block_ids.size()));
    for (std::size_t i = 0; i < md.block_ids.size(); ++i) {
        w.str(md.block_ids[i].file_id);
        w.u32(md.block_ids[i].index);
        w.str(md.datanode_addresses[i]);
    }
    w.u64(md.file_size);
    return w.take();
}

MetadataRecord decode_metadata(ByteView data) {
    ByteReader r(data);
    MetadataRecord md;
    std::uint32_t n = r.u32();
    md.block_ids.reserve(n);
    md.datanode_addresses.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        BlockId id;
        id.file_id = r.str();
        id.index = r.u32();
        md.block_ids.push_back(id);
        md.datanode_addresses.push_back(r.str());
    }
    md.file_size = r.u64();
    r.expect_done();
    return md;
}

Bytes encode_token(const BlockAccessToken& t) {
    ByteWriter w;
    w.str(t.block_id.file_id);
    w.u32(t.block_id.index);
    w.str(t.target_datanode);
    w.u64(t.request_id);
    w.i64(t.expiry);
    return w.take();
}

BlockAccessToken decode_token(ByteView data) {
    ByteReader r(data);
    BlockAccessToken t;
    t.block_id.file_id = r.str();
    t.block_id.index = r.u32();
    t.target_datanode = r.str();
    t.request_id = r.u64();
    t.expiry = r.i64();
    r.expect_done();
    return t;
}

Bytes encode(const Message& msg) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(kind_of(msg)));
    std::visit(
        [&w](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SetupRequest>) {
                w.u64(m.session);
                w.str(m.user);
                w.sealed(m.wrapped_key);
            } else if constexpr (std::is_same_v<T, SetupResponse>) {
                w.u64(m.session);
                w.u8(m.ok ? 1 : 0);
                w.str(m.reason);
            } else if constexpr (std::is_same_v<T, SetupCommit> ||
                                 std::is_same_v<T, SetupAbort>) {
                w.u64(m.session);
            } else if constexpr (std::is_same_v<T, MigrateRequest>) {
                w.u64(m.session);
                w.sealed(m.trigger);
            } else if constexpr (std::is_same_v<T, MetadataTransfer>) {
                w.u64(m.session);
                w.sealed(m.sealed_metadata);
            } else if constexpr (std::is_same_v<T, MetadataReject>) {
                w.u64(m.session);
                w.str(m.reason);
            } else if constexpr (std::is_same_v<T, SessionKeyShare>) {
                w.u64(m.session);
                w.sealed(m.sealed_key);
            } else if constexpr (std::is_same_v<T, TokenDelivery>) {
                w.u64(m.session);
                w.u64(m.request_id);
                w.sealed(m.sealed_routing);
                w.sealed(m.sealed_token);
            } else if constexpr (std::is_same_v<T, StartBlock>) {
                w.u64(m.session);
                w.u64(m.request_id);
            } else if constexpr (std::is_same_v<T, ReadRequest>) {
                w.u64(m.session);
                w.u64(m.request_id);
                w.str(m.block_id.file_id);
                w.u32(m.block_id.index);
                w.str(m.reply_to);
                w.sealed(m.sealed_token);
            } else if constexpr (std::is_same_v<T, ReadReject>) {
                w.u64(m.session);
                w.u64(m.request_id);
                w.str(m.reason);
            } else if constexpr (std::is_same_v<T, DataMsg>) {
                w.u64(m.session);
                w.u64(m.body.request_id);
                w.str(m.body.block_id.file_id);
                w.u32(m.body.block_id.index);
                w.blob(m.body.data);
                w.blob(m.body.nonce);
                w.sealed(m.body.sealed_hash);
                w.u32(m.body.attempt);
            } else if constexpr (std::is_same_v<T, AckMsg>) {
                w.u64(m.session);
                w.u64(m.body.request_id);
                w.sealed(m.body.sealed_receipt);
            } else if constexpr (std::is_same_v<T, BlockStoredNote>) {
                w.u64(m.session);
                w.u64(m.request_id);
                w.str(m.block_id.file_id);
                w.u32(m.block_id.index);
                w.u64(m.block_bytes);
            }
        },
        msg);
    return w.take();
}

MsgKind kind_of(const Message& msg) {
    return std::visit(
        [](const auto& m) -> MsgKind {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SetupRequest>) return MsgKind::setup_request;
            else if constexpr (std::is_same_v<T, SetupResponse>) return MsgKind::setup_response;
            else if constexpr (std::is_same_v<T, SetupCommit>) return MsgKind::setup_commit;
            else if constexpr (std::is_same_v<T, SetupAbort>) return MsgKind::setup_abort;
            else if constexpr (std::is_same_v<T, MigrateRequest>) return MsgKind::migrate_request;
            else if constexpr (std::is_same_v<T, MetadataTransfer>)
                return MsgKind::metadata_transfer;
            else if constexpr (std::is_same_v<T, MetadataReject>) return MsgKind::metadata_reject;
            else if constexpr (std::is_same_v<T, SessionKeyShare>)
                return MsgKind::session_key_share;
            else if constexpr (std::is_same_v<T, TokenDelivery>) return MsgKind::token_delivery;
            else if constexpr (std::is_same_v<T, StartBlock>) return MsgKind::start_block;
            else if constexpr (std::is_same_v<T, ReadRequest>) return MsgKind::read_request;
            else if constexpr (std::is_same_v<T, ReadReject>) return MsgKind::read_reject;
            else if constexpr (std::is_same_v<T, DataMsg>) return MsgKind::data_msg;
            else if constexpr (std::is_same_v<T, AckMsg>) return MsgKind::ack_msg;
            else return MsgKind::block_stored_note;
        },
        msg);
}

MsgKind peek_kind(ByteView data) {
    if (data.empty()) throw ParseError("empty message");
    std::uint8_t k = data[0];
    if (k < 1 || k > static_cast<std::uint8_t>(MsgKind::block_stored_note))
        throw ParseError("unknown message kind");
    return static_cast<MsgKind>(k);
}

Message decode(ByteView data) {
    MsgKind kind = peek_kind(data);
    ByteReader r(data.subspan(1));
    switch (kind) {
        case MsgKind::setup_request: {
            SetupRequest m;
            m.session = r.u64();
            m.user = r.str();
            m.wrapped_key = r.sealed();
            r.expect_done();
            return m;
        }
        case MsgKind::setup_response: {
            SetupResponse m;
            m.session = r.u64();
            m.ok = r.u8() != 0;
            m.reason = r.str();
            r.expect_done();
            return m;
        }
        case MsgKind::setup_commit: {
            SetupCommit m;
            m.session = r.u64();
            r.expect_done();
            return m;
        }
        case MsgKind::setup_abort: {
            SetupAbort m;
            m.session = r.u64();
            r.expect_done();
            return m;
        }
        case MsgKind::migrate_request: {
            MigrateRequest m;
            m.session = r.u64();
            m.trigger = r.sealed();
            r.expect_done();
            return m;
        }
        case MsgKind::metadata_transfer: {
            MetadataTransfer m;
            m.session = r.u64();
            m.sealed_metadata = r.sealed();
            r.expect_done();
            return m;
        }
        case MsgKind::metadata_reject: {
            MetadataReject m;
            m.session = r.u64();
            m.reason = r.str();
            r.expect_done();
            return m;
        }
        case MsgKind::session_key_share: {
            SessionKeyShare m;
            m.session = r.u64();
            m.sealed_key = r.sealed();
            r.expect_done();
            return m;
        }
        case MsgKind::token_delivery: {
            TokenDelivery m;
            m.session = r.u64();
            m.request_id = r.u64();
            m.sealed_routing = r.sealed();
            m.sealed_token = r.sealed();
            r.expect_done();
            return m;
        }
        case MsgKind::start_block: {
            StartBlock m;
            m.session = r.u64();
            m.request_id = r.u64();
            r.expect_done();
            return m;
        }
        case MsgKind::read_request: {
            ReadRequest m;
            m.session = r.u64();
            m.request_id = r.u64();
            m.block_id.file_id = r.str();
            m.block_id.index = r.u32();
            m.reply_to = r.str();
            m.sealed_token = r.sealed();
            r.expect_done();
            return m;
        }
        case MsgKind::read_reject: {
            ReadReject m;
            m.session = r.u64();
            m.request_id = r.u64();
            m.reason = r.str();
            r.expect_done();
            return m;
        }
        case MsgKind::data_msg: {
            DataMsg m;
            m.session = r.u64();
            m.body.request_id = r.u64();
            m.body.block_id.file_id = r.str();
            m.body.block_id.index = r.u32();
            m.body.data = r.blob();
            m.body.nonce = r.blob();
            m.body.sealed_hash = r.sealed();
            m.body.attempt = r.u32();
            r.expect_done();
            return m;
        }
        case MsgKind::ack_msg: {
            AckMsg m;
            m.session = r.u64();
            m.body.request_id = r.u64();
            m.body.sealed_receipt = r.sealed();
            r.expect_done();
            return m;
        }
        case MsgKind::block_stored_note: {
            BlockStoredNote m;
            m.session = r.u64();
            m.request_id = r.u64();
            m.block_id.file_id = r.str();
            m.block_id.index = r.u32();
            m.block_bytes = r.u64();
            r.expect_done();
            return m;
        }
    }
    throw ParseError("unreachable");
}

}  // namespace migsim::wire
