#include "arit/cli/charts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>

#include "arit/common/error.hpp"
#include "arit/imagecore/image.hpp"
#include "arit/imagecore/image_io.hpp"

namespace arit::cli {

namespace {

struct Rgb {
    float r, g, b;
};

constexpr Rgb kInk{0.10f, 0.10f, 0.12f};
constexpr Rgb kBar{0.20f, 0.33f, 0.61f};
constexpr Rgb kDot{0.72f, 0.20f, 0.16f};
constexpr Rgb kFaint{0.86f, 0.86f, 0.88f};

// 3x5 glyphs, one octal digit per row, top row in the highest bits.
constexpr std::uint16_t G(int a, int b, int c, int d, int e) {
    return std::uint16_t(a << 12 | b << 9 | c << 6 | d << 3 | e);
}

std::uint16_t glyph(char ch) {
    switch (std::toupper(static_cast<unsigned char>(ch))) {
    case '0': return G(7, 5, 5, 5, 7);
    case '1': return G(2, 6, 2, 2, 7);
    case '2': return G(7, 1, 7, 4, 7);
    case '3': return G(7, 1, 7, 1, 7);
    case '4': return G(5, 5, 7, 1, 1);
    case '5': return G(7, 4, 7, 1, 7);
    case '6': return G(7, 4, 7, 5, 7);
    case '7': return G(7, 1, 1, 2, 2);
    case '8': return G(7, 5, 7, 5, 7);
    case '9': return G(7, 5, 7, 1, 7);
    case 'A': return G(2, 5, 7, 5, 5);
    case 'B': return G(6, 5, 6, 5, 6);
    case 'C': return G(3, 4, 4, 4, 3);
    case 'D': return G(6, 5, 5, 5, 6);
    case 'E': return G(7, 4, 6, 4, 7);
    case 'F': return G(7, 4, 6, 4, 4);
    case 'G': return G(3, 4, 5, 5, 3);
    case 'H': return G(5, 5, 7, 5, 5);
    case 'I': return G(7, 2, 2, 2, 7);
    case 'J': return G(1, 1, 1, 5, 2);
    case 'K': return G(5, 5, 6, 5, 5);
    case 'L': return G(4, 4, 4, 4, 7);
    case 'M': return G(5, 7, 7, 5, 5);
    case 'N': return G(7, 5, 5, 5, 5);
    case 'O': return G(2, 5, 5, 5, 2);
    case 'P': return G(6, 5, 6, 4, 4);
    case 'Q': return G(2, 5, 5, 7, 3);
    case 'R': return G(6, 5, 6, 5, 5);
    case 'S': return G(3, 4, 2, 1, 6);
    case 'T': return G(7, 2, 2, 2, 2);
    case 'U': return G(5, 5, 5, 5, 7);
    case 'V': return G(5, 5, 5, 5, 2);
    case 'W': return G(5, 5, 7, 7, 5);
    case 'X': return G(5, 5, 2, 5, 5);
    case 'Y': return G(5, 5, 2, 2, 2);
    case 'Z': return G(7, 1, 2, 4, 7);
    case '-': return G(0, 0, 7, 0, 0);
    case '_': return G(0, 0, 0, 0, 7);
    case '.': return G(0, 0, 0, 0, 2);
    case ',': return G(0, 0, 0, 2, 4);
    case ':': return G(0, 2, 0, 2, 0);
    case '+': return G(0, 2, 7, 2, 0);
    case '/': return G(1, 1, 2, 4, 4);
    case '=': return G(0, 7, 0, 7, 0);
    case '%': return G(5, 1, 2, 4, 5);
    case '(': return G(2, 4, 4, 4, 2);
    case ')': return G(2, 1, 1, 1, 2);
    default: return 0;
    }
}

class Canvas {
public:
    Canvas(int w, int h) : image_(h, w, 3) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) set(x, y, {1.0f, 1.0f, 1.0f});
    }

    int width() const { return image_.width; }
    int height() const { return image_.height; }

    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= image_.width || y >= image_.height) return;
        image_.at(y, x, 0) = c.r;
        image_.at(y, x, 1) = c.g;
        image_.at(y, x, 2) = c.b;
    }

    void hline(int x0, int x1, int y, Rgb c) {
        for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
    }
    void vline(int x, int y0, int y1, Rgb c) {
        for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
    }
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
        for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) hline(x0, x1, y, c);
    }

    void draw_char(int x, int y, char ch, Rgb c) {
        const std::uint16_t bits = glyph(ch);
        for (int row = 0; row < 5; ++row)
            for (int col = 0; col < 3; ++col)
                if (bits >> ((4 - row) * 3 + (2 - col)) & 1) set(x + col, y + row, c);
    }

    // Horizontal text, 4 px advance per character.
    void draw_text(int x, int y, const std::string& text, Rgb c) {
        for (char ch : text) {
            draw_char(x, y, ch, c);
            x += 4;
        }
    }

    // Vertical text, characters stacked top to bottom.
    void draw_text_down(int x, int y, const std::string& text, Rgb c) {
        for (char ch : text) {
            draw_char(x, y, ch, c);
            y += 6;
        }
    }

    void save(const std::string& path) const { img::write_png(path, image_); }

private:
    img::ImageTensor image_;
};

std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Range {
    double lo, hi;
    double span() const { return hi - lo; }
};

Range padded_range(double lo, double hi, bool include_zero) {
    if (include_zero) {
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

void check_finite(const std::vector<double>& vs, const char* what) {
    if (vs.empty()) throw DataError(std::string(what) + ": empty value list");
    for (double v : vs)
        if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite value");
}

} // namespace

void write_bar_chart(const std::string& path, const std::vector<double>& values,
                     const std::vector<std::string>& labels, const std::string& title,
                     const std::string& stamp) {
    check_finite(values, "bar chart");
    if (!labels.empty() && labels.size() != values.size())
        throw DataError("bar chart: label count does not match value count");

    const int W = 480, H = 360;
    const int left = 56, right = W - 16, top = 28, bottom = H - 100;
    Canvas cv(W, H);

    const Range r = padded_range(*std::min_element(values.begin(), values.end()),
                                 *std::max_element(values.begin(), values.end()), true);
    auto to_y = [&](double v) {
        return int(std::lround(bottom - (v - r.lo) / r.span() * (bottom - top)));
    };

    cv.draw_text(left, 10, title, kInk);
    for (int t = 0; t <= 4; ++t) {
        const double v = r.lo + r.span() * t / 4.0;
        const int y = to_y(v);
        cv.hline(left + 1, right, y, kFaint);
        cv.hline(left - 3, left, y, kInk);
        cv.draw_text(4, y - 2, format_tick(v), kInk);
    }

    const int n = int(values.size());
    const double slot = double(right - left) / n;
    for (int i = 0; i < n; ++i) {
        const int x0 = left + int(std::lround(slot * i + slot * 0.15));
        const int x1 = left + int(std::lround(slot * i + slot * 0.85)) - 1;
        cv.fill_rect(std::min(x0, x1), std::min(to_y(values[size_t(i)]), to_y(0.0)),
                     std::max(x0, x1), std::max(to_y(values[size_t(i)]), to_y(0.0)), kBar);
        if (!labels.empty()) {
            const int cx = left + int(std::lround(slot * (i + 0.5)));
            cv.draw_text_down(cx - 1, bottom + 5, labels[size_t(i)].substr(0, 15), kInk);
        }
    }
    cv.vline(left, top, bottom, kInk);
    cv.hline(left, right, to_y(0.0), kInk);
    if (!stamp.empty()) cv.draw_text(W - 4 * int(stamp.size()) - 4, H - 8, stamp, kInk);
    cv.save(path);
}

void write_scatter_chart(const std::string& path, const std::vector<double>& xs,
                         const std::vector<double>& ys, const std::string& x_label,
                         const std::string& y_label, const std::string& title,
                         const std::string& stamp) {
    check_finite(xs, "scatter chart x");
    check_finite(ys, "scatter chart y");
    if (xs.size() != ys.size()) throw DataError("scatter chart: x/y length mismatch");

    const int W = 480, H = 360;
    const int left = 56, right = W - 16, top = 28, bottom = H - 56;
    Canvas cv(W, H);

    const Range rx = padded_range(*std::min_element(xs.begin(), xs.end()),
                                  *std::max_element(xs.begin(), xs.end()), false);
    const Range ry = padded_range(*std::min_element(ys.begin(), ys.end()),
                                  *std::max_element(ys.begin(), ys.end()), false);
    auto to_x = [&](double v) {
        return int(std::lround(left + (v - rx.lo) / rx.span() * (right - left)));
    };
    auto to_y = [&](double v) {
        return int(std::lround(bottom - (v - ry.lo) / ry.span() * (bottom - top)));
    };

    cv.draw_text(left, 10, title, kInk);
    for (int t = 0; t <= 4; ++t) {
        const double vy = ry.lo + ry.span() * t / 4.0;
        cv.hline(left - 3, left, to_y(vy), kInk);
        cv.draw_text(4, to_y(vy) - 2, format_tick(vy), kInk);
        const double vx = rx.lo + rx.span() * t / 4.0;
        cv.vline(to_x(vx), bottom, bottom + 3, kInk);
        cv.draw_text(to_x(vx) - 8, bottom + 6, format_tick(vx), kInk);
    }
    cv.vline(left, top, bottom, kInk);
    cv.hline(left, right, bottom, kInk);
    cv.draw_text(left + (right - left) / 2 - 2 * int(x_label.size()), H - 24, x_label, kInk);
    cv.draw_text_down(8, top + 14, y_label.substr(0, 12), kInk);

    for (size_t i = 0; i < xs.size(); ++i) {
        const int cx = to_x(xs[i]), cy = to_y(ys[i]);
        cv.fill_rect(cx - 1, cy - 1, cx + 1, cy + 1, kDot);
    }
    if (!stamp.empty()) cv.draw_text(W - 4 * int(stamp.size()) - 4, H - 8, stamp, kInk);
    cv.save(path);
}

} // namespace arit::cli
