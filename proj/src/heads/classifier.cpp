#include "noddet/heads/classifier.hpp"

#include <stdexcept>

namespace noddet::heads {

using nn::Graph;
using nn::Var;

ClassifierHead::ClassifierHead(nn::ParamStore& ps, int pyramid_channels, int pool, int fc_width,
                               double dropout_rate)
    : dropout_rate_(dropout_rate), input_width_(pyramid_channels * pool * pool) {
    fc1_ = nn::Linear(ps, "classifier.fc1", input_width_, fc_width);
    fc2_ = nn::Linear(ps, "classifier.fc2", fc_width, fc_width);
    cls_ = nn::Linear(ps, "classifier.cls", fc_width, 2);
    reg_ = nn::Linear(ps, "classifier.reg", fc_width, 4);
}

ClassifierOut ClassifierHead::forward(Graph& g, Var rois, bool training, Rng& rng) const {
    const nn::Tensor& t = rois.val();
    if (t.ndim() != 2 || t.dim(1) != input_width_)
        throw std::invalid_argument("ClassifierHead: pooled feature width mismatch");
    Var h = g.relu(fc1_.forward(g, rois));
    h = g.dropout(h, dropout_rate_, rng, training);
    h = g.relu(fc2_.forward(g, h));
    h = g.dropout(h, dropout_rate_, rng, training);
    ClassifierOut out;
    out.class_logits = cls_.forward(g, h);
    out.class_probs = g.softmax_rows(out.class_logits);
    out.deltas = reg_.forward(g, h);
    return out;
}

}  // namespace noddet::heads
