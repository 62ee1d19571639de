#include "ragent/matrix.hpp"

#include "ragent/error.hpp"

namespace ragent {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != rows * cols)
        throw Error(ErrorCode::FormatError, "matrix payload does not match its dimensions");
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t end) const
{
    if (begin > end || end > rows_)
        throw Error(ErrorCode::OutOfRange, "row slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                               ") outside " + std::to_string(rows_) + " rows");
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                            data_.begin() + static_cast<std::ptrdiff_t>(end * cols_));
    return Matrix(end - begin, cols_, std::move(out));
}

void Matrix::round_to_float()
{
    for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace ragent
