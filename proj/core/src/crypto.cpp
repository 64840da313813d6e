#include "swarmnet/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <memory>

#include "swarmnet/error.hpp"

namespace swarmnet {

Bytes aes128_ctr(const Key16& key, const Block16& iv, std::span<const std::uint8_t> data) {
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ctr(), nullptr, key.data(), iv.data()) != 1)
    throw Error("AES-128-CTR init failed");
  Bytes out(data.size() + 16);
  int len = 0;
  if (!data.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, data.data(), static_cast<int>(data.size())) != 1)
    throw Error("AES-128-CTR update failed");
  int tail = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1) throw Error("AES-128-CTR final failed");
  out.resize(static_cast<std::size_t>(len + tail));
  return out;
}

Digest32 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) {
  Digest32 out{};
  unsigned int len = 0;
  static const std::uint8_t empty = 0;
  const unsigned char* d = data.empty() ? &empty : data.data();
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), d, data.size(), out.data(), &len) == nullptr ||
      len != out.size())
    throw Error("HMAC-SHA-256 failed");
  return out;
}

Digest32 sha256(std::span<const std::uint8_t> data) {
  Digest32 out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) return false;
  if (a.empty()) return true;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace swarmnet
