#pragma once

#include <cstddef>
#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <utility>
#include <vector>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "qpot/linalg.hpp"

namespace qpot {

using NodeIndex = std::size_t;

/// Axis-aligned rectangle housing the computational mesh.
struct Domain {
  double xmin = -1.0;
  double xmax = 1.0;
  double ymin = -1.0;
  double ymax = 1.0;

  /// Throws std::invalid_argument unless xmax > xmin and ymax > ymin.
  void validate() const;
  bool contains(Vec2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  friend bool operator==(const Domain&, const Domain&) = default;
};

/// Regular rectangular mesh of nx * ny nodes. Node (i, j) has flat index i + j * nx.
class Grid {
 public:
  Grid(std::size_t nx, std::size_t ny, const Domain& domain);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  const Domain& domain() const { return domain_; }
  double h1() const { return h1_; }
  double h2() const { return h2_; }
  /// max(h1, h2)
  double h() const { return h_; }

  NodeIndex index(std::size_t i, std::size_t j) const { return i + j * nx_; }
  std::size_t column(NodeIndex n) const { return n % nx_; }
  std::size_t row(NodeIndex n) const { return n / nx_; }
  Vec2 position(std::size_t i, std::size_t j) const {
    return {domain_.xmin + static_cast<double>(i) * h1_,
            domain_.ymin + static_cast<double>(j) * h2_};
  }
  Vec2 position(NodeIndex n) const { return position(column(n), row(n)); }
  bool is_boundary(NodeIndex n) const {
    const auto i = column(n);
    const auto j = row(n);
    return i == 0 || j == 0 || i + 1 == nx_ || j + 1 == ny_;
  }
  bool valid(NodeIndex n) const { return n < size(); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.domain_ == b.domain_;
  }

 private:
  std::size_t nx_;
  std::size_t ny_;
  Domain domain_;
  double h1_;
  double h2_;
  double h_;
};

/// In-bounds members of the 8-neighbourhood of `node`, in increasing index order.
std::vector<NodeIndex> neighbors8(const Grid& grid, NodeIndex node);

/// All in-bounds nodes other than `node` within Euclidean distance K*h of it.
std::vector<NodeIndex> far_neighborhood(const Grid& grid, NodeIndex node, int K);

/// Offsets (di, dj) of the disk of radius K*h, stored as one contiguous di-range
/// per row dj. Distances are physical, so non-square meshes give elliptic index sets.
class DiskStencil {
 public:
  DiskStencil(const Grid& grid, int K);

  struct Row {
    int dj;
    int di_max;  // the row covers di in [-di_max, di_max]
  };
  const std::vector<Row>& rows() const { return rows_; }
  int K() const { return K_; }

  /// Calls fn(index) for every in-bounds node of the disk around (i, j), the centre excluded.
  template <typename Fn>
  void for_each(const Grid& grid, std::size_t i, std::size_t j, Fn&& fn) const {
    const auto nx = static_cast<long>(grid.nx());
    const auto ny = static_cast<long>(grid.ny());
    const auto ci = static_cast<long>(i);
    const auto cj = static_cast<long>(j);
    for (const Row& r : rows_) {
      const long jj = cj + r.dj;
      if (jj < 0 || jj >= ny) continue;
      const long lo = ci - r.di_max < 0 ? 0 : ci - r.di_max;
      const long hi = ci + r.di_max >= nx ? nx - 1 : ci + r.di_max;
      const std::size_t base = static_cast<std::size_t>(jj) * grid.nx();
      for (long ii = lo; ii <= hi; ++ii) {
        if (r.dj == 0 && ii == ci) continue;
        fn(base + static_cast<std::size_t>(ii));
      }
    }
  }

  /// Like for_each, restricted to nodes whose byte in `tags` equals `wanted`, and
  /// calling fn(index, column, row). Rows are scanned sixteen or eight bytes at a time.
  template <typename Fn>
  void for_each_tagged(const Grid& grid, const std::uint8_t* tags, std::uint8_t wanted,
                       std::size_t i, std::size_t j, Fn&& fn) const {
    const auto nx = static_cast<long>(grid.nx());
    const auto ny = static_cast<long>(grid.ny());
    const auto ci = static_cast<long>(i);
    const auto cj = static_cast<long>(j);
    const std::size_t centre = grid.index(i, j);
    constexpr std::uint64_t kLow7 = 0x7F7F7F7F7F7F7F7FULL;
    const std::uint64_t pattern = 0x0101010101010101ULL * wanted;
    for (const Row& r : rows_) {
      const long jj = cj + r.dj;
      if (jj < 0 || jj >= ny) continue;
      const long lo = ci - r.di_max < 0 ? 0 : ci - r.di_max;
      const long hi = ci + r.di_max >= nx ? nx - 1 : ci + r.di_max;
      std::size_t n = static_cast<std::size_t>(jj) * grid.nx() + static_cast<std::size_t>(lo);
      const std::size_t end = static_cast<std::size_t>(jj) * grid.nx() + static_cast<std::size_t>(hi) + 1;
      long col = lo;
#if defined(__SSE2__)
      const __m128i wanted16 = _mm_set1_epi8(static_cast<char>(wanted));
      for (; n + 16 <= end; n += 16) {
        const __m128i chunk = _mm_loadu_si128(reinterpret_cast<const __m128i*>(tags + n));
        auto hits = static_cast<unsigned>(_mm_movemask_epi8(_mm_cmpeq_epi8(chunk, wanted16)));
        while (hits) {
          const auto off = static_cast<std::size_t>(std::countr_zero(hits));
          const std::size_t m = n + off;
          if (m != centre) fn(m, static_cast<std::size_t>(col) + off, static_cast<std::size_t>(jj));
          hits &= hits - 1;
        }
        col += 16;
      }
#endif
      for (; n + 8 <= end; n += 8) {
        std::uint64_t word;
        std::memcpy(&word, tags + n, 8);
        const std::uint64_t t = word ^ pattern;
        // high bit set exactly in the bytes of t that are zero
        std::uint64_t hits = ~(((t & kLow7) + kLow7) | t | kLow7);
        while (hits) {
          const std::size_t off = static_cast<std::size_t>(std::countr_zero(hits) >> 3);
          const std::size_t m = n + off;
          if (m != centre) fn(m, static_cast<std::size_t>(col + off), static_cast<std::size_t>(jj));
          hits &= hits - 1;
        }
        col += 8;
      }
      for (; n < end; ++n, ++col) {
        if (tags[n] == wanted && n != centre) {
          fn(n, static_cast<std::size_t>(col), static_cast<std::size_t>(jj));
        }
      }
    }
  }

 private:
  int K_;
  std::vector<Row> rows_;
};

/// Label-setting state of a mesh node. The enumerator order is the only allowed
/// direction of change.
enum class NodeLabel : std::uint8_t { Unknown = 0, Considered = 1, AcceptedFront = 2, Accepted = 3 };

const char* to_string(NodeLabel label);

/// Binary min-heap over node indices with decrease-key. Ties in key are broken by
/// the smaller node index, so the extraction order is fully deterministic.
class IndexedMinHeap {
 public:
  explicit IndexedMinHeap(std::size_t capacity);

  struct Entry {
    double key;
    NodeIndex node;
  };

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  bool contains(NodeIndex node) const { return node < slot_.size() && slot_[node] != kAbsent; }
  double key(NodeIndex node) const;
  /// Heap position of a node, if present.
  std::optional<std::size_t> slot(NodeIndex node) const;

  /// Throws std::logic_error if the node is already present.
  void insert(NodeIndex node, double key);
  /// Throws std::logic_error if the node is absent or the new key is larger.
  void decrease_key(NodeIndex node, double key);
  /// Returns nullopt when empty.
  std::optional<Entry> extract_min();
  std::optional<Entry> peek() const;

  /// Checks heap order and the reverse table. For tests.
  bool check_invariants() const;

 private:
  static constexpr std::uint32_t kAbsent = 0xFFFFFFFFu;

  static bool less(const Entry& a, const Entry& b) {
    return a.key < b.key || (a.key == b.key && a.node < b.node);
  }
  void sift_up(std::size_t pos);
  void sift_down(std::size_t pos);
  void place(std::size_t pos, const Entry& e) {
    heap_[pos] = e;
    slot_[e.node] = static_cast<std::uint32_t>(pos);
  }

  std::vector<Entry> heap_;
  std::vector<std::uint32_t> slot_;
};

}  // namespace qpot
