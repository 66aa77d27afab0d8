#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srcondense/tensor.hpp"

namespace srcn {

/// One executed convolution as seen by the counting hook.
struct MacRecord {
  std::string op;
  Shape output;
  std::uint64_t macs = 0;
};

/// Collects multiply-accumulate counts from convolution kernels executed on
/// this thread while a MacCountingScope is active.
class MacCounter {
 public:
  void record(std::string op, const Shape& output, std::uint64_t macs);
  [[nodiscard]] const std::vector<MacRecord>& records() const { return records_; }
  [[nodiscard]] std::uint64_t total() const;
  void clear() { records_.clear(); }

 private:
  std::vector<MacRecord> records_;
};

class MacCountingScope {
 public:
  explicit MacCountingScope(MacCounter& counter);
  ~MacCountingScope();
  MacCountingScope(const MacCountingScope&) = delete;
  MacCountingScope& operator=(const MacCountingScope&) = delete;

 private:
  MacCounter* previous_;
};

namespace detail {
void report_macs(const char* op, const Shape& output, std::uint64_t macs);
}

}  // namespace srcn
