#pragma once

#include <Eigen/Dense>

namespace cascadelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Mat rotation2d(double angle);

// Angle of a 2x2 rotation, in [0, 2*pi).
double rotation_angle(const Mat& rotation);

// ||A A^T - I||_max and |det A - 1|; used by every rotation validity check.
double orthonormality_defect(const Mat& a);
double determinant_defect(const Mat& a);

double operator_norm(const Mat& a);
double smallest_singular_value(const Mat& a);

}  // namespace cascadelab
