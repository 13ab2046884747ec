#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cfready {

// Dense row-major matrix of encoded rows.
class RowMatrix {
public:
    RowMatrix() = default;
    explicit RowMatrix(std::size_t cols) : cols_(cols) {}

    static RowMatrix from_rows(const std::vector<std::vector<double>>& rows);

    void push_back(std::span<const double> row);

    std::size_t rows() const noexcept { return cols_ == 0 ? 0 : values_.size() / cols_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return values_.empty(); }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }
    double at(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
    const std::vector<double>& values() const noexcept { return values_; }

    // Rows picked by index, in the given order.
    RowMatrix select(std::span<const std::size_t> indices) const;

    bool operator==(const RowMatrix&) const = default;

private:
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

} // namespace cfready
