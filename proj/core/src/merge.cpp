#include "qvle/merge.hpp"

#include <cmath>
#include <cstring>

#include "qvle/errors.hpp"
#include "qvle/io_util.hpp"

namespace qvle::merge {

bool ParamSet::same_manifest(const ParamSet& other) const {
  if (params.size() != other.params.size()) return false;
  auto it = other.params.begin();
  for (const auto& [name, arr] : params) {
    if (it->first != name || it->second.size() != arr.size()) return false;
    ++it;
  }
  return true;
}

ParamSet merge_checkpoints(const std::vector<ParamSet>& inputs,
                           const std::vector<double>& weights) {
  if (inputs.size() < 2) throw EmptyBatchError();
  if (weights.size() != inputs.size())
    throw ManifestMismatchError(std::to_string(weights.size()) + " weights for " +
                                std::to_string(inputs.size()) + " inputs");
  double wsum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw NonFiniteError("merge weights");
    wsum += w;
  }
  if (wsum <= 0.0) throw NonFiniteError("merge weights (zero sum)");
  for (std::size_t i = 1; i < inputs.size(); ++i)
    if (!inputs[i].same_manifest(inputs[0]))
      throw ManifestMismatchError("input " + std::to_string(i));

  ParamSet out;
  for (const auto& [name, arr] : inputs[0].params) out.params[name] = Vec(arr.size(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double w = weights[i] / wsum;
    for (const auto& [name, arr] : inputs[i].params) {
      Vec& dst = out.params[name];
      for (std::size_t j = 0; j < arr.size(); ++j) {
        if (!std::isfinite(arr[j])) throw NonFiniteError("param " + name);
        dst[j] += w * arr[j];
      }
    }
  }
  return out;
}

GridSearchResult grid_search_merge(const std::vector<ParamSet>& inputs,
                                   const std::vector<std::vector<double>>& candidates,
                                   const std::function<double(const ParamSet&)>& objective) {
  if (candidates.empty()) throw EmptyBatchError();
  GridSearchResult best;
  bool have = false;
  for (const auto& w : candidates) {
    ParamSet merged = merge_checkpoints(inputs, w);
    const double score = objective(merged);
    if (!have || score > best.objective) {
      best = {std::move(merged), w, score};
      have = true;
    }
  }
  return best;
}

namespace {
constexpr char kMagic[4] = {'Q', 'V', 'L', 'P'};
}

void save_paramset(const std::string& path, const ParamSet& ps) {
  std::string buf;
  buf.append(kMagic, 4);
  const std::uint32_t count = static_cast<std::uint32_t>(ps.params.size());
  buf.append(reinterpret_cast<const char*>(&count), 4);
  for (const auto& [name, arr] : ps.params) {
    const std::uint32_t nlen = static_cast<std::uint32_t>(name.size());
    const std::uint64_t alen = arr.size();
    buf.append(reinterpret_cast<const char*>(&nlen), 4);
    buf.append(name);
    buf.append(reinterpret_cast<const char*>(&alen), 8);
    buf.append(reinterpret_cast<const char*>(arr.data()), arr.size() * 8);
  }
  atomic_write(path, buf);
}

ParamSet load_paramset(const std::string& path) {
  const std::string buf = read_file(path);
  std::size_t off = 0;
  auto need = [&](std::size_t n) {
    if (off + n > buf.size()) throw IoError(path + ": truncated checkpoint");
  };
  need(8);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw IoError(path + ": bad checkpoint magic");
  off = 4;
  std::uint32_t count;
  std::memcpy(&count, buf.data() + off, 4);
  off += 4;
  ParamSet ps;
  for (std::uint32_t i = 0; i < count; ++i) {
    need(4);
    std::uint32_t nlen;
    std::memcpy(&nlen, buf.data() + off, 4);
    off += 4;
    need(nlen + 8);
    std::string name(buf.data() + off, nlen);
    off += nlen;
    std::uint64_t alen;
    std::memcpy(&alen, buf.data() + off, 8);
    off += 8;
    need(alen * 8);
    Vec arr(alen);
    std::memcpy(arr.data(), buf.data() + off, alen * 8);
    off += alen * 8;
    ps.params.emplace(std::move(name), std::move(arr));
  }
  return ps;
}

}  // namespace qvle::merge
