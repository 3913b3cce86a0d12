#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <ostream>

#include "stopsec/db.hpp"
#include "stopsec/watermark.hpp"

namespace stopsec {

// Adaptive peak-to-median thresholding parameters. The factor starts at 4.5
// and is tuned from detection history: every window without a detection
// steps it down (CFAR drifting toward the noise floor), repeated
// frame-validation failures step it up, always within [min, max].
struct ThresholdAdapt {
    double up_step = 1.1;
    double down_step = 0.97;
    double min_factor = 3.0;
    double max_factor = 8.0;
    int silent_windows_before_down = 1;
    // Once synchronized the detector decodes back-to-back packets on the
    // packet grid; a packet keeps the lock while its local preamble peak
    // clears this weaker gate against the acquisition-time median.
    double track_factor = 2.5;
};

struct DetectorConfig {
    OfdmConfig ofdm;
    ChipCode code;
    int n_pseudonym_subcarriers = 1;
    double threshold_factor_init = 4.5;
    ThresholdAdapt adapt;
    size_t fifo_len_samples = 0;  // 0: two packet lengths
    double frame_gap_reset_packets = 3.0;
    std::string channel_id = "ch0";

    void validate() const;
    size_t fifo_len() const;
};

struct DetectionEvent {
    size_t packet_start_sample = 0;  // index within the examined window
    double peak_to_median = 0.0;
    double timestamp_s = 0.0;
};

// Mutable detection state threaded through detect_packet_start.
struct DetectorState {
    double threshold_factor = 4.5;
    int silent_windows = 0;
    int frames_since_validation = 0;  // P-bits consumed without a valid frame

    void note_silence(const ThresholdAdapt& adapt);
    void note_validation_failure(const ThresholdAdapt& adapt);
    void note_validation_success();
};

// One CFAR pass over a window: correlate against the HTSTF preamble, fire
// when peak >= factor * median. Absence of an event is not an error.
// median_out, when given, receives the window's correlation median.
std::optional<DetectionEvent> detect_packet_start(const IqBlock& window,
                                                  const DetectorConfig& dcfg,
                                                  DetectorState& state,
                                                  double* median_out = nullptr);

// Per-chip mean magnitudes of the pseudonym bin(s) over a packet-aligned
// block: one FFT-bin magnitude per OFDM symbol, averaged per chip, averaged
// across bins when more than one subcarrier is allocated.
std::vector<double> extract_chip_energies(const IqBlock& rx_packet, const DetectorConfig& dcfg);

// Correlates mean-removed chip energies against the mean-removed bipolar
// bit-1 pattern (chip value c maps to 1 - 2c, the BPSK convention, which is
// exactly the on/off amplitude pattern the bit-1 code transmits). Returns
// the bit and |score|; an exact zero score ties to bit 0. Mean removal makes
// the decision invariant to constant energy offsets from channel drift.
std::pair<int, double> decide_pbit(const std::vector<double>& energies, const ChipCode& code);

// Growing P-bit stream plus a 38-bit sliding frame assembler.
struct PBitStream {
    std::deque<uint8_t> bits;
    std::deque<double> per_bit_correlation;

    void push(int bit, double correlation);
    void clear();
};

// Slides a 38-bit window: a preamble match triggers frame_decode; OK or
// corrected frames consume 38 bits, anything else advances one bit.
std::vector<DecodeVerdict> assemble_frames(PBitStream& stream);

// Sink for decoded reports. Returning false signals back-pressure: the
// detector retries the report on the next feed and emits nothing new
// until the sink drains.
using ReportSink = std::function<bool(const InterferenceReport&)>;

// Streaming pipeline: preamble search, chip-energy extraction, P-bit
// decisions, frame assembly, report emission. Single consumer per stream.
class PuDetector {
public:
    explicit PuDetector(DetectorConfig dcfg);

    void set_sink(ReportSink sink) { sink_ = std::move(sink); }
    void feed(const std::vector<cplx>& samples);
    void flush();  // process whatever remains in the buffer

    const DetectorState& state() const { return state_; }
    size_t packets_decoded() const { return packets_decoded_; }
    size_t reports_emitted() const { return reports_emitted_; }
    size_t reports_dropped() const { return reports_dropped_; }
    bool backpressured() const { return !pending_reports_.empty(); }

    // Optional debug dump: packet_idx,chip_idx,energy rows.
    void enable_energy_dump(std::ostream* os) { energy_dump_ = os; }

private:
    void process_buffer(bool flushing);
    bool try_decode_packet_at(size_t offset_in_buffer, double peak_to_median);
    void emit(const InterferenceReport& report);
    void drain_pending();
    double abs_time_s(size_t buffer_offset) const;

    DetectorConfig dcfg_;
    IqBlock preamble_;
    DetectorState state_;
    std::vector<cplx> buffer_;
    uint64_t buffer_start_abs_ = 0;  // absolute sample index of buffer_[0]
    bool locked_ = false;            // synchronized to a packet grid
    double median_ref_ = 0.0;        // correlation median at acquisition
    std::optional<uint64_t> last_packet_end_abs_;
    PBitStream pbits_;
    ReportSink sink_;
    std::deque<InterferenceReport> pending_reports_;
    size_t packets_decoded_ = 0;
    size_t reports_emitted_ = 0;
    size_t reports_dropped_ = 0;
    std::ostream* energy_dump_ = nullptr;
};

// One-shot convenience: run the streaming detector over a whole block and
// collect the reports it emits.
std::vector<InterferenceReport> run_detector(const IqBlock& rx_stream, const DetectorConfig& dcfg,
                                             ReportSink sink = {});

}  // namespace stopsec
