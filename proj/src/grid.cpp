#include "qpot/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qpot {

void Domain::validate() const {
  if (!(xmax > xmin) || !(ymax > ymin)) {
    throw std::invalid_argument("domain must satisfy xmax > xmin and ymax > ymin");
  }
}

Grid::Grid(std::size_t nx, std::size_t ny, const Domain& domain)
    : nx_(nx), ny_(ny), domain_(domain) {
  domain_.validate();
  if (nx < 2 || ny < 2) {
    throw std::invalid_argument("grid needs at least 2 nodes per direction");
  }
  if (nx * ny >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("grid too large");
  }
  h1_ = (domain_.xmax - domain_.xmin) / static_cast<double>(nx - 1);
  h2_ = (domain_.ymax - domain_.ymin) / static_cast<double>(ny - 1);
  h_ = std::max(h1_, h2_);
}

std::vector<NodeIndex> neighbors8(const Grid& grid, NodeIndex node) {
  std::vector<NodeIndex> out;
  out.reserve(8);
  const auto i = static_cast<long>(grid.column(node));
  const auto j = static_cast<long>(grid.row(node));
  const auto nx = static_cast<long>(grid.nx());
  const auto ny = static_cast<long>(grid.ny());
  for (long dj = -1; dj <= 1; ++dj) {
    for (long di = -1; di <= 1; ++di) {
      if (di == 0 && dj == 0) continue;
      const long ii = i + di;
      const long jj = j + dj;
      if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
      out.push_back(grid.index(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj)));
    }
  }
  return out;
}

DiskStencil::DiskStencil(const Grid& grid, int K) : K_(K) {
  if (K < 1) throw std::invalid_argument("update factor K must be >= 1");
  const double radius = K * grid.h();
  // Relative slack so that offsets lying exactly on the circle are kept despite rounding.
  const double r2 = radius * radius * (1.0 + 1e-12);
  const int dj_max = static_cast<int>(std::floor(radius / grid.h2() + 1e-9));
  for (int dj = -dj_max; dj <= dj_max; ++dj) {
    const double y = dj * grid.h2();
    const double rest = r2 - y * y;
    if (rest < 0.0) continue;
    int di_max = static_cast<int>(std::floor(std::sqrt(rest) / grid.h1()));
    // Correct the floor against the exact test used by far_neighborhood.
    while (std::pow((di_max + 1) * grid.h1(), 2) + y * y <= r2) ++di_max;
    while (di_max >= 0 && std::pow(di_max * grid.h1(), 2) + y * y > r2) --di_max;
    if (di_max < 0) continue;
    rows_.push_back({dj, di_max});
  }
}

std::vector<NodeIndex> far_neighborhood(const Grid& grid, NodeIndex node, int K) {
  const DiskStencil disk(grid, K);
  std::vector<NodeIndex> out;
  disk.for_each(grid, grid.column(node), grid.row(node), [&](NodeIndex n) { out.push_back(n); });
  return out;
}

const char* to_string(NodeLabel label) {
  switch (label) {
    case NodeLabel::Unknown:
      return "Unknown";
    case NodeLabel::Considered:
      return "Considered";
    case NodeLabel::AcceptedFront:
      return "AcceptedFront";
    case NodeLabel::Accepted:
      return "Accepted";
  }
  return "?";
}

IndexedMinHeap::IndexedMinHeap(std::size_t capacity) : slot_(capacity, kAbsent) {}

double IndexedMinHeap::key(NodeIndex node) const {
  if (!contains(node)) throw std::logic_error("heap: node not present");
  return heap_[slot_[node]].key;
}

std::optional<std::size_t> IndexedMinHeap::slot(NodeIndex node) const {
  if (!contains(node)) return std::nullopt;
  return slot_[node];
}

void IndexedMinHeap::insert(NodeIndex node, double key) {
  if (node >= slot_.size()) throw std::logic_error("heap: node index out of range");
  if (slot_[node] != kAbsent) {
    throw std::logic_error("heap: node " + std::to_string(node) + " already present");
  }
  heap_.push_back({key, node});
  slot_[node] = static_cast<std::uint32_t>(heap_.size() - 1);
  sift_up(heap_.size() - 1);
}

void IndexedMinHeap::decrease_key(NodeIndex node, double key) {
  if (!contains(node)) {
    throw std::logic_error("heap: decrease_key on absent node " + std::to_string(node));
  }
  const std::size_t pos = slot_[node];
  if (key > heap_[pos].key) throw std::logic_error("heap: decrease_key would increase the key");
  heap_[pos].key = key;
  sift_up(pos);
}

std::optional<IndexedMinHeap::Entry> IndexedMinHeap::extract_min() {
  if (heap_.empty()) return std::nullopt;
  const Entry top = heap_.front();
  slot_[top.node] = kAbsent;
  const Entry last = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) {
    place(0, last);
    sift_down(0);
  }
  return top;
}

std::optional<IndexedMinHeap::Entry> IndexedMinHeap::peek() const {
  if (heap_.empty()) return std::nullopt;
  return heap_.front();
}

void IndexedMinHeap::sift_up(std::size_t pos) {
  const Entry e = heap_[pos];
  while (pos > 0) {
    const std::size_t parent = (pos - 1) / 2;
    if (!less(e, heap_[parent])) break;
    place(pos, heap_[parent]);
    pos = parent;
  }
  place(pos, e);
}

void IndexedMinHeap::sift_down(std::size_t pos) {
  const Entry e = heap_[pos];
  const std::size_t n = heap_.size();
  for (;;) {
    std::size_t child = 2 * pos + 1;
    if (child >= n) break;
    if (child + 1 < n && less(heap_[child + 1], heap_[child])) ++child;
    if (!less(heap_[child], e)) break;
    place(pos, heap_[child]);
    pos = child;
  }
  place(pos, e);
}

bool IndexedMinHeap::check_invariants() const {
  for (std::size_t pos = 0; pos < heap_.size(); ++pos) {
    if (slot_[heap_[pos].node] != pos) return false;
    if (pos > 0 && less(heap_[pos], heap_[(pos - 1) / 2])) return false;
  }
  std::size_t present = 0;
  for (auto s : slot_) present += (s != kAbsent);
  return present == heap_.size();
}

}  // namespace qpot
