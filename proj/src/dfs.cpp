#include "migsim/dfs.hpp"

#include <sstream>

namespace migsim {

DataNode* Cluster::find_data_node(const NodeAddress& addr) {
    for (auto& dn : data_nodes) {
        if (dn.address == addr) return &dn;
    }
    return nullptr;
}

const DataNode* Cluster::node_holding(const BlockId& id) const {
    for (const auto& dn : data_nodes) {
        if (dn.blocks.count(id)) return &dn;
    }
    return nullptr;
}

BlockPlan plan_block_placement(std::uint64_t file_size, std::uint64_t block_size,
                               std::uint32_t data_node_count) {
    BlockPlan plan;
    if (block_size == 0 || data_node_count == 0) return plan;
    plan.block_count =
        file_size == 0 ? 1
                       : static_cast<std::uint32_t>((file_size + block_size - 1) / block_size);
    plan.node_for_block.reserve(plan.block_count);
    for (std::uint32_t i = 0; i < plan.block_count; ++i) {
        plan.node_for_block.push_back(i % data_node_count);
    }
    return plan;
}

MetadataRecord put_file(Cluster& cluster, const FileId& file_id, ByteView payload,
                        bool owner_encrypted, std::uint64_t block_size) {
    if (cluster.name_node.files.count(file_id)) throw DuplicateFileError(file_id);

    BlockPlan plan = plan_block_placement(payload.size(), block_size,
                                          static_cast<std::uint32_t>(cluster.data_nodes.size()));
    MetadataRecord md;
    md.file_size = payload.size();
    for (std::uint32_t i = 0; i < plan.block_count; ++i) {
        std::uint64_t begin = static_cast<std::uint64_t>(i) * block_size;
        std::uint64_t end = std::min<std::uint64_t>(begin + block_size, payload.size());
        DataBlock block;
        block.id = BlockId{file_id, i};
        if (end > begin) block.payload.assign(payload.begin() + begin, payload.begin() + end);
        block.owner_encrypted = owner_encrypted;

        DataNode& node = cluster.data_nodes[plan.node_for_block[i]];
        node.blocks[block.id] = block;
        md.block_ids.push_back(block.id);
        md.datanode_addresses.push_back(node.address);
    }
    cluster.name_node.files[file_id] = md;
    return md;
}

const DataBlock& read_block(const DataNode& node, const BlockId& id) {
    auto it = node.blocks.find(id);
    if (it == node.blocks.end()) throw MissingBlockError(id);
    return it->second;
}

void delete_block(DataNode& node, const BlockId& id, const VerifiedAckEvidence& proof) {
    auto it = node.blocks.find(id);
    if (it == node.blocks.end()) throw MissingBlockError(id);

    auto ack = node.verified_acks.find(proof.request_id);
    if (ack == node.verified_acks.end() || ack->second.block_id != id ||
        ack->second.digest != proof.digest || proof.block_id != id) {
        throw InvalidProofError(id);
    }
    node.blocks.erase(it);
}

std::string dump_state(const Cluster& cluster) {
    std::ostringstream out;
    out << "cluster " << cluster.id << "\n";
    out << "  namenode " << cluster.name_node.address << " files=" << cluster.name_node.files.size()
        << "\n";
    for (const auto& [file, md] : cluster.name_node.files) {
        out << "    file " << file << " size=" << md.file_size << " blocks=" << md.block_ids.size()
            << "\n";
    }
    for (const auto& dn : cluster.data_nodes) {
        out << "  datanode " << dn.address << " blocks=" << dn.blocks.size() << "\n";
        for (const auto& [id, block] : dn.blocks) {
            out << "    block " << id.to_string() << " bytes=" << block.payload.size()
                << " digest=" << to_hex(crypto::hash_digest(view(block.payload), {}).to_vec())
                << "\n";
        }
    }
    return out.str();
}

}  // namespace migsim
