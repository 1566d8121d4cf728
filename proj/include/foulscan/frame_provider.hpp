#pragma once

#include <cstddef>
#include <vector>

#include "foulscan/model.hpp"

namespace foulscan {

// Pull interface for frame streams. frame(i) must be safe to call
// concurrently for distinct indices; implementations materialize one frame at
// a time so hour-long transects never have to fit in memory.
class FrameProvider {
  public:
    virtual ~FrameProvider() = default;
    virtual std::size_t size() const = 0;
    virtual EmbeddedFrame frame(std::size_t index) const = 0;
};

class VectorFrameProvider final : public FrameProvider {
  public:
    explicit VectorFrameProvider(const std::vector<EmbeddedFrame>& frames) : frames_(&frames) {}
    std::size_t size() const override { return frames_->size(); }
    EmbeddedFrame frame(std::size_t index) const override { return (*frames_)[index]; }

  private:
    const std::vector<EmbeddedFrame>* frames_;
};

// Every nth frame of a base stream, timestamps untouched.
class SampledFrameProvider final : public FrameProvider {
  public:
    SampledFrameProvider(const FrameProvider& base, std::size_t stride)
        : base_(&base), stride_(stride) {}
    std::size_t size() const override { return (base_->size() + stride_ - 1) / stride_; }
    EmbeddedFrame frame(std::size_t index) const override { return base_->frame(index * stride_); }

  private:
    const FrameProvider* base_;
    std::size_t stride_;
};

}  // namespace foulscan
