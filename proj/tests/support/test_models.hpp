#pragma once

// Small constant-coefficient models shared by the unit and acceptance tests.

#include "cgpdf/model.hpp"

namespace testing_models {

using cgpdf::ConditionalGaussianModel;
using cgpdf::Mat;
using cgpdf::Vec;

// du_I = (A0 + A1 u_II) dt + ΣI dW, du_II = (a0 + a1 u_II) dt + ΣII dW with
// every coefficient constant.
inline ConditionalGaussianModel constant_model(Vec A0, Mat A1, Vec a0, Mat a1,
                                               Mat sI, Mat sII) {
  using CV = ConditionalGaussianModel::ConstVecRef;
  const auto nI = A1.rows(), nII = A1.cols();
  ConditionalGaussianModel::Fields f;
  f.A0 = [A0](double, const CV&, Eigen::Ref<Vec> o) { o = A0; };
  f.A1 = [A1](double, const CV&, Eigen::Ref<Mat> o) { o = A1; };
  f.a0 = [a0](double, const CV&, Eigen::Ref<Vec> o) { o = a0; };
  f.a1 = [a1](double, const CV&, Eigen::Ref<Mat> o) { o = a1; };
  f.sigma_I = [sI](double, const CV&, Eigen::Ref<Mat> o) { o = sI; };
  f.sigma_II = [sII](double, const CV&, Eigen::Ref<Mat> o) { o = sII; };
  return ConditionalGaussianModel(nI, nII, std::move(f), "constant");
}

// Scalar observed and hidden coordinate.
inline ConditionalGaussianModel scalar_model(double A0, double A1, double a0,
                                             double a1, double sI, double sII) {
  return constant_model(Vec::Constant(1, A0), Mat::Constant(1, 1, A1),
                        Vec::Constant(1, a0), Mat::Constant(1, 1, a1),
                        Mat::Constant(1, 1, sI), Mat::Constant(1, 1, sII));
}

// Independent OU coordinates du = -u dt + s dW in both blocks.
inline ConditionalGaussianModel ou_model(cgpdf::Index nI, cgpdf::Index nII,
                                         double s) {
  using CV = ConditionalGaussianModel::ConstVecRef;
  ConditionalGaussianModel::Fields f;
  f.A0 = [](double, const CV& u, Eigen::Ref<Vec> o) { o = -u; };
  f.A1 = [](double, const CV&, Eigen::Ref<Mat> o) { o.setZero(); };
  f.a0 = [](double, const CV&, Eigen::Ref<Vec> o) { o.setZero(); };
  f.a1 = [](double, const CV&, Eigen::Ref<Mat> o) { o.setIdentity(); o *= -1.0; };
  f.sigma_I = [s](double, const CV&, Eigen::Ref<Mat> o) { o.setIdentity(); o *= s; };
  f.sigma_II = [s](double, const CV&, Eigen::Ref<Mat> o) { o.setIdentity(); o *= s; };
  return ConditionalGaussianModel(nI, nII, std::move(f), "ou");
}

}  // namespace testing_models
