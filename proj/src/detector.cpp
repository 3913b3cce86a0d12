#include "stopsec/detector.hpp"

#include <algorithm>
#include <cmath>

#include "stopsec/fft.hpp"

namespace stopsec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMedianFloor = 1e-12;
constexpr size_t kMaxPendingReports = 64;
}  // namespace

void DetectorConfig::validate() const {
    ofdm.validate();
    code.validate(ofdm);
    require(n_pseudonym_subcarriers >= 1 && n_pseudonym_subcarriers <= 3,
            "DetectorConfig: 1-3 pseudonym subcarriers supported");
    require(adapt.min_factor > 1.0 && adapt.min_factor <= threshold_factor_init &&
                threshold_factor_init <= adapt.max_factor,
            "DetectorConfig: threshold bounds must satisfy 1 < min <= init <= max");
    require(adapt.up_step >= 1.0 && adapt.down_step <= 1.0 && adapt.down_step > 0.0,
            "DetectorConfig: bad adaptation steps");
}

size_t DetectorConfig::fifo_len() const {
    return fifo_len_samples ? fifo_len_samples : 2 * static_cast<size_t>(ofdm.packet_len());
}

void DetectorState::note_silence(const ThresholdAdapt& adapt) {
    if (++silent_windows >= adapt.silent_windows_before_down) {
        threshold_factor = std::max(adapt.min_factor, threshold_factor * adapt.down_step);
        silent_windows = 0;
    }
}

void DetectorState::note_validation_failure(const ThresholdAdapt& adapt) {
    threshold_factor = std::min(adapt.max_factor, threshold_factor * adapt.up_step);
}

void DetectorState::note_validation_success() { silent_windows = 0; }

std::optional<DetectionEvent> detect_packet_start(const IqBlock& window,
                                                  const DetectorConfig& dcfg,
                                                  DetectorState& state, double* median_out) {
    const IqBlock preamble = build_htstf_preamble(dcfg.ofdm);
    require(window.size() >= preamble.size() + static_cast<size_t>(dcfg.ofdm.symbol_len()),
            "detect_packet_start: window shorter than preamble plus one symbol");

    const std::vector<cplx> corr = cross_correlate(window.samples, preamble.samples);
    std::vector<double> mags(corr.size());
    for (size_t i = 0; i < corr.size(); ++i) mags[i] = std::abs(corr[i]);

    std::vector<double> scratch = mags;
    auto mid = scratch.begin() + static_cast<long>(scratch.size() / 2);
    std::nth_element(scratch.begin(), mid, scratch.end());
    const double median = *mid;
    if (median_out) *median_out = median;
    if (median < kMedianFloor) {  // all-zero / degenerate window
        state.note_silence(dcfg.adapt);
        return std::nullopt;
    }

    // Earliest lag clearing the CFAR gate wins; packets decode in time
    // order. Capture among overlapping SUs emerges on its own: a dominant
    // signal raises the median floor above a weaker preamble's peak, and
    // frame validation rejects P-bits decoded under heavy interference.
    const double gate = state.threshold_factor * median;
    size_t first = mags.size();
    for (size_t i = 0; i < mags.size(); ++i) {
        if (mags[i] >= gate) {
            first = i;
            break;
        }
    }
    if (first == mags.size()) {
        state.note_silence(dcfg.adapt);
        return std::nullopt;
    }

    // Refine to the local peak within one symbol of the crossing; the
    // preamble autocorrelation is sharp so this pins the true start.
    size_t best = first;
    const size_t stop = std::min(mags.size(), first + static_cast<size_t>(dcfg.ofdm.symbol_len()));
    for (size_t i = first; i < stop; ++i)
        if (mags[i] > mags[best]) best = i;

    state.silent_windows = 0;
    return DetectionEvent{best, mags[best] / median, 0.0};
}

std::vector<double> extract_chip_energies(const IqBlock& rx_packet, const DetectorConfig& dcfg) {
    const OfdmConfig& cfg = dcfg.ofdm;
    const size_t l_chips = dcfg.code.length();
    const size_t spc = static_cast<size_t>(dcfg.code.symbols_per_chip);
    const size_t needed = static_cast<size_t>(cfg.preamble_len()) +
                          l_chips * spc * static_cast<size_t>(cfg.symbol_len());
    require(rx_packet.size() >= needed,
            "extract_chip_energies: block misaligned or shorter than the chip span");

    const SubcarrierMap map = subcarrier_map(cfg);
    const std::vector<int> bins = map.pseudonym_bins(dcfg.n_pseudonym_subcarriers);
    const int n = cfg.fft_size;

    // Single-bin DFT rows; only the pseudonym bin(s) are needed.
    std::vector<std::vector<cplx>> rows;
    for (int b : bins) {
        std::vector<cplx> row(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            double a = -kTwoPi * static_cast<double>(b) * static_cast<double>(i) /
                       static_cast<double>(n);
            row[static_cast<size_t>(i)] = {std::cos(a), std::sin(a)};
        }
        rows.push_back(std::move(row));
    }

    std::vector<double> chips(l_chips, 0.0);
    size_t pos = static_cast<size_t>(cfg.preamble_len());
    for (size_t l = 0; l < l_chips; ++l) {
        double acc = 0.0;
        for (size_t s = 0; s < spc; ++s) {
            for (const auto& row : rows) {
                cplx bin = 0.0;
                const size_t base = pos + static_cast<size_t>(cfg.cyclic_prefix_len);
                for (int i = 0; i < n; ++i)
                    bin += rx_packet.samples[base + static_cast<size_t>(i)] *
                           row[static_cast<size_t>(i)];
                acc += std::abs(bin);
            }
            pos += static_cast<size_t>(cfg.symbol_len());
        }
        chips[l] = acc / (static_cast<double>(spc) * static_cast<double>(rows.size()));
    }
    return chips;
}

std::pair<int, double> decide_pbit(const std::vector<double>& energies, const ChipCode& code) {
    require(energies.size() == code.length(), "decide_pbit: energy count != code length");
    const size_t l = energies.size();

    double e_mean = 0.0;
    for (double e : energies) e_mean += e;
    e_mean /= static_cast<double>(l);

    double w_mean = 0.0;
    std::vector<double> w(l);
    for (size_t i = 0; i < l; ++i) {
        w[i] = 1.0 - 2.0 * static_cast<double>(code.chips_bit1[i]);
        w_mean += w[i];
    }
    w_mean /= static_cast<double>(l);

    double score = 0.0;
    double e_max = 0.0;
    for (size_t i = 0; i < l; ++i) {
        score += (energies[i] - e_mean) * (w[i] - w_mean);
        e_max = std::max(e_max, std::abs(energies[i]));
    }
    // Constant energy vectors must score an exact zero tie (broken to 0);
    // snap away the rounding residue of the mean removal.
    if (std::abs(score) <= 1e-9 * static_cast<double>(l) * e_max) score = 0.0;
    return {score > 0.0 ? 1 : 0, std::abs(score)};
}

void PBitStream::push(int bit, double correlation) {
    bits.push_back(static_cast<uint8_t>(bit & 1));
    per_bit_correlation.push_back(correlation);
}

void PBitStream::clear() {
    bits.clear();
    per_bit_correlation.clear();
}

std::vector<DecodeVerdict> assemble_frames(PBitStream& stream) {
    std::vector<DecodeVerdict> out;
    auto drop_front = [&stream](size_t n) {
        stream.bits.erase(stream.bits.begin(), stream.bits.begin() + static_cast<long>(n));
        stream.per_bit_correlation.erase(stream.per_bit_correlation.begin(),
                                         stream.per_bit_correlation.begin() + static_cast<long>(n));
    };
    while (stream.bits.size() >= kFrameBits) {
        bool preamble_match = true;
        for (size_t i = 0; i < kFramePreamble.size(); ++i) {
            if (stream.bits[i] != kFramePreamble[i]) {
                preamble_match = false;
                break;
            }
        }
        if (!preamble_match) {
            drop_front(1);
            continue;
        }
        Bits frame(stream.bits.begin(), stream.bits.begin() + kFrameBits);
        DecodeVerdict verdict = frame_decode(frame);
        if (verdict.status == DecodeStatus::kOk ||
            verdict.status == DecodeStatus::kCorrected1Bit) {
            out.push_back(verdict);
            drop_front(kFrameBits);
        } else {
            drop_front(1);
        }
    }
    return out;
}

PuDetector::PuDetector(DetectorConfig dcfg) : dcfg_(std::move(dcfg)) {
    dcfg_.validate();
    preamble_ = build_htstf_preamble(dcfg_.ofdm);
    state_.threshold_factor = dcfg_.threshold_factor_init;
}

double PuDetector::abs_time_s(size_t buffer_offset) const {
    return static_cast<double>(buffer_start_abs_ + buffer_offset) / dcfg_.ofdm.sample_rate_hz;
}

void PuDetector::feed(const std::vector<cplx>& samples) {
    buffer_.insert(buffer_.end(), samples.begin(), samples.end());
    drain_pending();
    process_buffer(false);
}

void PuDetector::flush() { process_buffer(true); }

void PuDetector::process_buffer(bool flushing) {
    const size_t plen = preamble_.size();
    const size_t packet_len = static_cast<size_t>(dcfg_.ofdm.packet_len());
    const size_t cp = static_cast<size_t>(dcfg_.ofdm.cyclic_prefix_len);
    const size_t min_window = plen + static_cast<size_t>(dcfg_.ofdm.symbol_len());

    auto advance_to = [this](size_t offset) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(offset));
        buffer_start_abs_ += offset;
    };

    auto note_gap_reset = [this, packet_len](uint64_t abs_start) {
        if (last_packet_end_abs_ &&
            static_cast<double>(abs_start - *last_packet_end_abs_) >
                dcfg_.frame_gap_reset_packets * static_cast<double>(packet_len)) {
            // Packets separated by a long gap belong to different frames.
            pbits_.clear();
        }
    };

    while (true) {
        if (locked_) {
            // Synchronized: the next packet is expected right at the buffer
            // head. Verify it with a local preamble check at the tracking
            // gate, allowing a cyclic prefix of timing slack.
            if (buffer_.size() < packet_len + cp) {
                if (!flushing) break;
                if (buffer_.size() < packet_len) break;
            }
            const size_t slack = buffer_.size() >= packet_len + cp ? cp : 0;
            size_t best = 0;
            double best_mag = 0.0;
            for (size_t lag = 0; lag <= slack; ++lag) {
                cplx acc = 0.0;
                for (size_t i = 0; i < plen; ++i)
                    acc += std::conj(preamble_.samples[i]) * buffer_[lag + i];
                const double m = std::abs(acc);
                if (m > best_mag) {
                    best_mag = m;
                    best = lag;
                }
            }
            if (median_ref_ < kMedianFloor ||
                best_mag < dcfg_.adapt.track_factor * median_ref_) {
                locked_ = false;  // signal gone; rescan from this position
                continue;
            }
            note_gap_reset(buffer_start_abs_ + best);
            try_decode_packet_at(best, best_mag / median_ref_);
            advance_to(best + packet_len);
            last_packet_end_abs_ = buffer_start_abs_;
            continue;
        }

        if (buffer_.size() < min_window) break;
        if (!flushing && buffer_.size() < dcfg_.fifo_len() &&
            buffer_.size() < packet_len + min_window)
            break;  // wait for a fuller FIFO before scanning

        const size_t window_len = std::min(buffer_.size(), dcfg_.fifo_len());
        IqBlock window;
        window.sample_rate_hz = dcfg_.ofdm.sample_rate_hz;
        window.samples.assign(buffer_.begin(), buffer_.begin() + static_cast<long>(window_len));

        double median = 0.0;
        auto event = detect_packet_start(window, dcfg_, state_, &median);
        if (!event) {
            // Slide half a packet: a marginal preamble missed in this window
            // gets another look after the threshold has stepped down.
            const size_t keep = min_window - 1;
            if (window_len <= keep) break;
            const size_t step = std::min(packet_len / 2, window_len - keep);
            advance_to(std::max<size_t>(step, 1));
            if (flushing) continue;
            if (buffer_.size() < dcfg_.fifo_len()) break;
            continue;
        }

        const size_t start = event->packet_start_sample;
        if (start + packet_len > buffer_.size()) {
            advance_to(start);
            if (!flushing) break;  // wait for the rest of the packet
            break;                 // flushing: trailing partial packet is dropped
        }

        note_gap_reset(buffer_start_abs_ + start);
        try_decode_packet_at(start, event->peak_to_median);
        advance_to(start + packet_len);
        last_packet_end_abs_ = buffer_start_abs_;
        locked_ = true;
        median_ref_ = median;
    }
}

bool PuDetector::try_decode_packet_at(size_t offset, double peak_to_median) {
    const size_t packet_len = static_cast<size_t>(dcfg_.ofdm.packet_len());
    IqBlock packet;
    packet.sample_rate_hz = dcfg_.ofdm.sample_rate_hz;
    packet.samples.assign(buffer_.begin() + static_cast<long>(offset),
                          buffer_.begin() + static_cast<long>(offset + packet_len));

    const std::vector<double> energies = extract_chip_energies(packet, dcfg_);
    const auto [bit, score] = decide_pbit(energies, dcfg_.code);

    if (energy_dump_) {
        for (size_t l = 0; l < energies.size(); ++l)
            *energy_dump_ << packets_decoded_ << ',' << l << ',' << energies[l] << '\n';
    }

    pbits_.push(bit, score);
    ++packets_decoded_;
    ++state_.frames_since_validation;

    const double t_end = abs_time_s(offset + packet_len);
    const auto verdicts = assemble_frames(pbits_);
    bool any = false;
    for (const auto& v : verdicts) {
        if (!v.pseudonym) continue;
        any = true;
        state_.note_validation_success();
        state_.frames_since_validation = 0;
        emit(InterferenceReport{*v.pseudonym, t_end, dcfg_.channel_id, ""});
    }
    // Two frame lengths of P-bits without a single valid frame: raise the bar.
    if (!any && state_.frames_since_validation >= static_cast<int>(2 * kFrameBits)) {
        state_.note_validation_failure(dcfg_.adapt);
        state_.frames_since_validation = 0;
    }
    (void)peak_to_median;
    return any;
}

void PuDetector::drain_pending() {
    while (!pending_reports_.empty()) {
        if (!sink_ || !sink_(pending_reports_.front())) return;
        pending_reports_.pop_front();
        ++reports_emitted_;
    }
}

void PuDetector::emit(const InterferenceReport& report) {
    drain_pending();
    if (!pending_reports_.empty() || !sink_) {
        if (pending_reports_.size() >= kMaxPendingReports) {
            ++reports_dropped_;  // sink stalled too long; report lost
            return;
        }
        pending_reports_.push_back(report);
        return;
    }
    if (sink_(report)) {
        ++reports_emitted_;
    } else {
        pending_reports_.push_back(report);
    }
}

std::vector<InterferenceReport> run_detector(const IqBlock& rx_stream, const DetectorConfig& dcfg,
                                             ReportSink sink) {
    PuDetector det(dcfg);
    std::vector<InterferenceReport> out;
    det.set_sink([&](const InterferenceReport& r) {
        if (sink && !sink(r)) return false;
        out.push_back(r);
        return true;
    });
    det.feed(rx_stream.samples);
    det.flush();
    return out;
}

}  // namespace stopsec
