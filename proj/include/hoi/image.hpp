#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hoi {

// 8-bit RGB image, row-major, interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;

    static Image filled(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
        Image im;
        im.width = w;
        im.height = h;
        im.rgb.assign(static_cast<size_t>(w) * h * 3, 0);
        for (size_t i = 0; i < im.rgb.size(); i += 3) {
            im.rgb[i] = r;
            im.rgb[i + 1] = g;
            im.rgb[i + 2] = b;
        }
        return im;
    }
    uint8_t* pixel(int x, int y) { return &rgb[(static_cast<size_t>(y) * width + x) * 3]; }
    const uint8_t* pixel(int x, int y) const {
        return &rgb[(static_cast<size_t>(y) * width + x) * 3];
    }
};

void write_ppm(const Image& im, const std::string& path);

}  // namespace hoi
