#include "planarion/svg.hpp"

#include <cstdio>

namespace planarion {

namespace {
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}
std::string gnum(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}
} // namespace

SvgPlot::SvgPlot(int width_px, int height_px) : width_(width_px), height_(height_px) {}

void SvgPlot::set_view(double xmin, double xmax, double ymin, double ymax) {
    xmin_ = xmin;
    xmax_ = xmax == xmin ? xmin + 1 : xmax;
    ymin_ = ymin;
    ymax_ = ymax == ymin ? ymin + 1 : ymax;
}

double SvgPlot::sx(double x) const {
    return margin_ + (x - xmin_) / (xmax_ - xmin_) * (width_ - 2 * margin_);
}

double SvgPlot::sy(double y) const {
    return height_ - margin_ - (y - ymin_) / (ymax_ - ymin_) * (height_ - 2 * margin_);
}

void SvgPlot::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                   double width) {
    body_ += "<line x1=\"" + num(sx(x1)) + "\" y1=\"" + num(sy(y1)) + "\" x2=\"" + num(sx(x2)) +
             "\" y2=\"" + num(sy(y2)) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             num(width) + "\"/>\n";
}

void SvgPlot::circle(double x, double y, double radius_px, const std::string& fill) {
    body_ += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(y)) + "\" r=\"" + num(radius_px) +
             "\" fill=\"" + fill + "\"/>\n";
}

void SvgPlot::polyline(const std::vector<std::pair<double, double>>& points,
                       const std::string& stroke, double width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
             "\" points=\"";
    for (const auto& [x, y] : points) body_ += num(sx(x)) + "," + num(sy(y)) + " ";
    body_ += "\"/>\n";
}

void SvgPlot::vline(double x, double y0, double y1, const std::string& stroke, double width) {
    body_ += "<line x1=\"" + num(sx(x)) + "\" y1=\"" + num(sy(y0)) + "\" x2=\"" + num(sx(x)) +
             "\" y2=\"" + num(sy(y1)) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             num(width) + "\" stroke-dasharray=\"4 3\"/>\n";
}

void SvgPlot::text(double x, double y, const std::string& s, int size_px,
                   const std::string& anchor) {
    body_ += "<text x=\"" + num(sx(x)) + "\" y=\"" + num(sy(y)) + "\" font-size=\"" +
             std::to_string(size_px) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
             "\">" + s + "</text>\n";
}

void SvgPlot::frame_and_ticks(const std::string& xlabel, const std::string& ylabel, int n_ticks) {
    body_ += "<rect x=\"" + num(margin_) + "\" y=\"" + num(margin_) + "\" width=\"" +
             num(width_ - 2 * margin_) + "\" height=\"" + num(height_ - 2 * margin_) +
             "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= n_ticks; ++k) {
        const double fx = xmin_ + (xmax_ - xmin_) * k / n_ticks;
        const double fy = ymin_ + (ymax_ - ymin_) * k / n_ticks;
        body_ += "<text x=\"" + num(sx(fx)) + "\" y=\"" + num(height_ - margin_ + 16) +
                 "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"middle\">" +
                 gnum(fx) + "</text>\n";
        body_ += "<text x=\"" + num(margin_ - 6) + "\" y=\"" + num(sy(fy) + 3) +
                 "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\">" + gnum(fy) +
                 "</text>\n";
    }
    body_ += "<text x=\"" + num(width_ / 2.0) + "\" y=\"" + num(height_ - 10.0) +
             "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">" + xlabel +
             "</text>\n";
    body_ += "<text x=\"14\" y=\"" + num(height_ / 2.0) +
             "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 14 " +
             num(height_ / 2.0) + ")\">" + ylabel + "</text>\n";
}

std::string SvgPlot::finish() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
           "width=\"" +
           std::to_string(width_) + "\" height=\"" + std::to_string(height_) +
           "\" viewBox=\"0 0 " + std::to_string(width_) + " " + std::to_string(height_) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

} // namespace planarion
