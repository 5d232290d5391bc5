#include "tversky/interpret/images.hpp"

#include <algorithm>

#include "tversky/io/pgm.hpp"

namespace tversky {

template <class T>
std::vector<std::string> export_prototype_images(const Tensor<T>& rows, int64_t height,
                                                 int64_t width, const std::string& dir,
                                                 const std::string& prefix,
                                                 const std::string& epoch_tag) {
    if (rows.rank() < 1) throw std::invalid_argument("export images: empty tensor");
    int64_t count = rows.shape[0];
    int64_t per = rows.numel() / std::max<int64_t>(count, 1);
    if (per != height * width)
        throw std::invalid_argument("export images: rows of " + std::to_string(per) +
                                    " values cannot reshape to " + std::to_string(height) + "x" +
                                    std::to_string(width));
    std::vector<std::string> paths;
    for (int64_t i = 0; i < count; ++i) {
        const T* p = &rows.data[static_cast<size_t>(i * per)];
        T lo = p[0], hi = p[0];
        for (int64_t j = 1; j < per; ++j) {
            lo = std::min(lo, p[j]);
            hi = std::max(hi, p[j]);
        }
        std::vector<uint8_t> pixels(static_cast<size_t>(per));
        if (hi > lo) {
            double scale = 255.0 / (static_cast<double>(hi) - static_cast<double>(lo));
            for (int64_t j = 0; j < per; ++j)
                pixels[static_cast<size_t>(j)] = static_cast<uint8_t>(
                    std::min(255.0, std::max(0.0, (static_cast<double>(p[j]) - lo) * scale + 0.5)));
        } else {
            std::fill(pixels.begin(), pixels.end(), static_cast<uint8_t>(128));
        }
        std::string path = dir + "/" + prefix + "_" + std::to_string(i) + epoch_tag + ".pgm";
        write_pgm(path, height, width, pixels);
        paths.push_back(std::move(path));
    }
    return paths;
}

template std::vector<std::string> export_prototype_images<float>(const Tensor<float>&, int64_t,
                                                                 int64_t, const std::string&,
                                                                 const std::string&,
                                                                 const std::string&);
template std::vector<std::string> export_prototype_images<double>(const Tensor<double>&, int64_t,
                                                                  int64_t, const std::string&,
                                                                  const std::string&,
                                                                  const std::string&);

}  // namespace tversky
