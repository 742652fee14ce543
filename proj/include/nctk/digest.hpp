#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace nctk {

// Incremental SHA-256 (OpenSSL EVP). Digests are reported as lowercase hex.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;

  void update(std::string_view bytes);
  std::string hex_digest();

 private:
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace nctk
