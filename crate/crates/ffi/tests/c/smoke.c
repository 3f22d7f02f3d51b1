#include <stdio.h>
#include <string.h>
#include "polarflip.h"

int main(void) {
    size_t mu[4] = {127, 191, 223, 255};
    uint32_t crc[4] = {8, 8, 8, 8};
    PfCode *code = NULL;
    if (pf_code_new(256, 160, 3.0, mu, crc, 4, &code) != PF_STATUS_OK) return 1;
    size_t k = pf_code_message_length(code);
    uint8_t msg[256], x[256], out[256];
    double llr[256];
    for (size_t i = 0; i < k; i++) msg[i] = (uint8_t)((i * 5) % 3 == 0);
    if (pf_code_encode(code, msg, k, x, 256) != PF_STATUS_OK) return 2;
    if (pf_transmit(x, 256, 9.0, (double)k / 256.0, 7, 0, llr) != PF_STATUS_OK) return 3;
    PfDecoderConfig cfg = pf_decoder_config_default();
    PfDecoder *dec = NULL;
    if (pf_decoder_new(code, &cfg, &dec) != PF_STATUS_OK) return 4;
    PfDecodeResult res;
    if (pf_decoder_decode(dec, PF_ALGORITHM_PSCLF, llr, 256, out, k, &res) != PF_STATUS_OK) return 5;
    if (res.status != PF_DECODE_STATUS_SUCCESS || memcmp(out, msg, k) != 0) return 6;
    cfg.list_size = 5;
    PfDecoder *bad = NULL;
    if (pf_decoder_new(code, &cfg, &bad) != PF_STATUS_INVALID_PARAMETER) return 7;
    char buf[128];
    if (pf_last_error_message(buf, sizeof buf) == 0) return 8;
    pf_decoder_free(dec);
    pf_code_free(code);
    printf("ok %s\n", buf);
    return 0;
}
