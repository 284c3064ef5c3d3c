#ifndef A2V_RESAMPLE_H_
#define A2V_RESAMPLE_H_

#include "a2v/audio.h"

namespace a2v {

// Kaiser-windowed sinc polyphase resampler. The kernel spans 8 ms of source
// time (4 ms each side) with beta = 14.77; cutoff at the lower of the two
// Nyquist frequencies. target_rate == sample_rate returns a bit-identical
// copy. Output length is round(len * target / source).
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace a2v

#endif  // A2V_RESAMPLE_H_
