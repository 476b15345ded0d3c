#include "sabrnet/netfit.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "sabrnet/version.hpp"

namespace sabrnet {

namespace {

constexpr char kMagic[6] = {'S', 'A', 'B', 'R', 'N', 'N'};

void put(std::ofstream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

template <typename T>
void put_value(std::ofstream& out, T value) {
  put(out, &value, sizeof(T));
}

class In {
 public:
  explicit In(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    data_ = buf.str();
  }
  void get(void* dst, std::size_t size) {
    if (offset_ + size > data_.size())
      throw DataError("checkpoint truncated at offset " + std::to_string(offset_));
    std::memcpy(dst, data_.data() + offset_, size);
    offset_ += size;
  }
  template <typename T>
  T get_value() {
    T v;
    get(&v, sizeof(T));
    return v;
  }

 private:
  std::string data_;
  std::size_t offset_ = 0;
};

}  // namespace

template <typename Scalar>
void save_network(const Network<Scalar>& net, const std::filesystem::path& path,
                  std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  put(out, kMagic, sizeof(kMagic));
  put_value<std::uint16_t>(out, kCheckpointFormatVersion);
  put_value<std::uint64_t>(out, config_hash);
  const std::string version = kToolVersion;
  put_value<std::uint16_t>(out, static_cast<std::uint16_t>(version.size()));
  put(out, version.data(), version.size());
  put_value<std::int32_t>(out, net.config.hidden_layers);
  put_value<std::int32_t>(out, net.config.nodes_per_layer);
  put_value<std::uint64_t>(out, net.config.init_seed);
  for (const double v : net.input_shift) put_value<double>(out, v);
  for (const double v : net.input_scale) put_value<double>(out, v);
  const Eigen::VectorXd params = net.parameters();
  put_value<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
  put(out, params.data(), static_cast<std::size_t>(params.size()) * sizeof(double));
  put_value<std::uint64_t>(out, static_cast<std::uint64_t>(net.history.size()));
  for (const auto& rec : net.history) {
    put_value<std::int32_t>(out, rec.epoch);
    put_value<double>(out, rec.train_loss);
    put_value<double>(out, rec.val_loss);
    put_value<double>(out, rec.lr);
  }
  if (!out) throw DataError("checkpoint write failed: " + path.string());
}

template <typename Scalar>
Network<Scalar> load_network(const std::filesystem::path& path) {
  In in(path);
  char magic[6];
  in.get(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path.string());
  const auto version = in.get_value<std::uint16_t>();
  if (version != kCheckpointFormatVersion)
    throw DataError("checkpoint format version " + std::to_string(version) + " unsupported");
  in.get_value<std::uint64_t>();  // config hash, informational
  const auto version_len = in.get_value<std::uint16_t>();
  std::string tool_version(version_len, '\0');
  in.get(tool_version.data(), version_len);

  NetConfig cfg;
  cfg.hidden_layers = in.get_value<std::int32_t>();
  cfg.nodes_per_layer = in.get_value<std::int32_t>();
  cfg.init_seed = in.get_value<std::uint64_t>();
  Network<Scalar> net = init_network<Scalar>(cfg);
  for (auto& v : net.input_shift) v = in.get_value<double>();
  for (auto& v : net.input_scale) v = in.get_value<double>();
  const auto param_count = in.get_value<std::uint64_t>();
  if (param_count != net.parameter_count())
    throw DataError("checkpoint parameter count mismatch");
  Eigen::VectorXd params(static_cast<long>(param_count));
  in.get(params.data(), param_count * sizeof(double));
  net.set_parameters(params);
  const auto history_count = in.get_value<std::uint64_t>();
  net.history.resize(history_count);
  for (auto& rec : net.history) {
    rec.epoch = in.get_value<std::int32_t>();
    rec.train_loss = in.get_value<double>();
    rec.val_loss = in.get_value<double>();
    rec.lr = in.get_value<double>();
  }
  return net;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path,
                       const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open history CSV for writing: " + path.string());
  if (!header_comment.empty()) out << header_comment;
  out << "epoch,train_loss,val_loss,lr\n";
  char line[160];
  for (const auto& rec : history) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g\n", rec.epoch, rec.train_loss,
                  rec.val_loss, rec.lr);
    out << line;
  }
  if (!out) throw DataError("history CSV write failed: " + path.string());
}

template void save_network<float>(const Network<float>&, const std::filesystem::path&,
                                  std::uint64_t);
template void save_network<double>(const Network<double>&, const std::filesystem::path&,
                                   std::uint64_t);
template Network<float> load_network<float>(const std::filesystem::path&);
template Network<double> load_network<double>(const std::filesystem::path&);

}  // namespace sabrnet
