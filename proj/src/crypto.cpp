#include "migsim/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/sha.h>

#include <memory>
#include <stdexcept>

namespace migsim::crypto {

namespace {

struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

void require(bool ok, const char* what) {
    if (!ok) throw std::runtime_error(std::string("crypto failure: ") + what);
}

}  // namespace

SealedBox seal(ByteView key, ByteView plaintext, ByteView aad, DetRng& rng) {
    require(key.size() == kKeySize, "key size");
    SealedBox box;
    box.nonce = rng.bytes(kAeadNonceSize);
    box.ciphertext.resize(plaintext.size());
    box.tag.resize(kTagSize);

    CipherCtx ctx(EVP_CIPHER_CTX_new());
    require(ctx != nullptr, "ctx alloc");
    require(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1,
            "gcm init");
    require(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                                static_cast<int>(kAeadNonceSize), nullptr) == 1,
            "iv len");
    require(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), box.nonce.data()) == 1,
            "key/iv");

    int len = 0;
    if (!aad.empty()) {
        require(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                                  static_cast<int>(aad.size())) == 1,
                "aad");
    }
    if (!plaintext.empty()) {
        require(EVP_EncryptUpdate(ctx.get(), box.ciphertext.data(), &len, plaintext.data(),
                                  static_cast<int>(plaintext.size())) == 1,
                "encrypt");
    }
    require(EVP_EncryptFinal_ex(ctx.get(), box.ciphertext.data() + len, &len) == 1, "final");
    require(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagSize),
                                box.tag.data()) == 1,
            "tag");
    return box;
}

std::optional<Bytes> open(ByteView key, const SealedBox& box, ByteView aad) {
    if (key.size() != kKeySize) return std::nullopt;
    if (box.nonce.size() != kAeadNonceSize || box.tag.size() != kTagSize) return std::nullopt;

    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) return std::nullopt;
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1)
        return std::nullopt;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                            static_cast<int>(kAeadNonceSize), nullptr) != 1)
        return std::nullopt;
    if (EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), box.nonce.data()) != 1)
        return std::nullopt;

    int len = 0;
    if (!aad.empty() &&
        EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
        return std::nullopt;

    Bytes plain(box.ciphertext.size());
    if (!box.ciphertext.empty() &&
        EVP_DecryptUpdate(ctx.get(), plain.data(), &len, box.ciphertext.data(),
                          static_cast<int>(box.ciphertext.size())) != 1)
        return std::nullopt;

    Bytes tag = box.tag;  // EVP wants a mutable pointer
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagSize),
                            tag.data()) != 1)
        return std::nullopt;
    if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &len) != 1) return std::nullopt;
    return plain;
}

Digest hash_digest(ByteView data, ByteView nonce) {
    Bytes preimage = concat(data, nonce);
    Digest d;
    SHA256(preimage.data(), preimage.size(), d.bytes.data());
    return d;
}

Bytes derive_key(ByteView password, ByteView salt, const KdfParams& params) {
    if (password.empty()) throw EmptyPasswordError();
    Bytes out(kKeySize);
    std::uint64_t n = 1ull << params.log2_cost;
    // generous maxmem so larger cost settings stay usable
    std::uint64_t maxmem = 512ull * 1024 * 1024;
    int rc = EVP_PBE_scrypt(reinterpret_cast<const char*>(password.data()), password.size(),
                            salt.data(), salt.size(), n, params.block_mix, params.parallel,
                            maxmem, out.data(), out.size());
    require(rc == 1, "scrypt");
    return out;
}

}  // namespace migsim::crypto
