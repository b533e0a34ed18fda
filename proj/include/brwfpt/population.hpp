#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace brwfpt {

// Live particles of one replica, stored column-wise: particle i occupies
// positions()[i*dim, (i+1)*dim). Ids are assigned from a per-replica counter
// in creation order.
class PopulationState {
 public:
  explicit PopulationState(int dim);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  std::int64_t generation() const noexcept { return generation_; }
  std::size_t peak_size() const noexcept { return peak_size_; }
  std::int64_t purge_events() const noexcept { return purge_events_; }

  std::span<const double> position(std::size_t i) const {
    return {positions_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> positions() const noexcept { return positions_; }
  std::uint64_t id(std::size_t i) const { return ids_[i]; }
  bool pending(std::size_t i) const { return pending_[i] != 0; }
  std::size_t pending_count() const noexcept;
  // Particles without a pending type-II flag.
  std::size_t ordinary_count() const noexcept { return size() - pending_count(); }

  // Appends a particle with a fresh id (used by tests and custom set-ups).
  std::uint64_t add_particle(std::span<const double> position, bool pending = false);

 private:
  friend struct PopulationAccess;

  int dim_;
  std::int64_t generation_ = 0;
  std::uint64_t next_id_ = 0;
  std::size_t peak_size_ = 0;
  std::int64_t purge_events_ = 0;
  std::vector<double> positions_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint8_t> pending_;
  // Reused between steps.
  std::vector<double> scratch_positions_;
  std::vector<std::uint32_t> scratch_parents_;
  std::vector<std::uint8_t> scratch_pending_;
};

// Generation 0: a single ordinary particle at the origin.
PopulationState init_population(int dim);

}  // namespace brwfpt
