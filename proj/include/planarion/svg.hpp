#pragma once

#include <string>
#include <utility>
#include <vector>

namespace planarion {

/// Minimal standalone-SVG plot canvas used for the CLI's figure outputs.
/// World coordinates map into a margin-framed viewport; y grows upward.
class SvgPlot {
public:
    SvgPlot(int width_px, int height_px);

    void set_view(double xmin, double xmax, double ymin, double ymax);
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0);
    void circle(double x, double y, double radius_px, const std::string& fill);
    void polyline(const std::vector<std::pair<double, double>>& points,
                  const std::string& stroke, double width = 1.0);
    void vline(double x, double y0, double y1, const std::string& stroke, double width = 1.0);
    void text(double x, double y, const std::string& s, int size_px = 11,
              const std::string& anchor = "middle");
    void frame_and_ticks(const std::string& xlabel, const std::string& ylabel, int n_ticks = 5);
    std::string finish() const;

private:
    double sx(double x) const;
    double sy(double y) const;

    int width_, height_;
    double xmin_ = 0, xmax_ = 1, ymin_ = 0, ymax_ = 1;
    double margin_ = 48;
    std::string body_;
};

} // namespace planarion
