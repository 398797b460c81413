#include "cascadelab/linalg.hpp"

#include <cmath>
#include <numbers>

namespace cascadelab {

Mat rotation2d(double angle) {
    Mat r(2, 2);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    r << c, -s, s, c;
    return r;
}

double rotation_angle(const Mat& rotation) {
    double a = std::atan2(rotation(1, 0), rotation(0, 0));
    if (a < 0) a += 2.0 * std::numbers::pi;
    return a;
}

double orthonormality_defect(const Mat& a) {
    const Mat gram = a * a.transpose();
    return (gram - Mat::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff();
}

double determinant_defect(const Mat& a) { return std::abs(a.determinant() - 1.0); }

double operator_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

double smallest_singular_value(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1);
}

}  // namespace cascadelab
