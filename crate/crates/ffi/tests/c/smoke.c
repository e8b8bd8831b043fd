#include <math.h>
#include <stdio.h>
#include "recoil_fidelity.h"

static const char *CONFIG =
    "{\"emitters\": {\"a\": {\"species\": \"171Yb+@369\", \"modes\": "
    "[{\"frequency_khz\": 1000, \"nbar\": 0}]}},"
    "\"protocol\": {\"frequency_unit\": \"Hz_linear\"},"
    "\"windows\": {\"w\": 2.0}}";

int main(void) {
    RfProtocol *p = NULL;
    if (rf_protocol_from_json(CONFIG, &p) != RF_STATUS_OK) {
        fprintf(stderr, "config: %s\n", rf_last_error_message());
        return 1;
    }
    RfBellResult r;
    if (rf_fidelity(p, RF_CHANNEL_SAME1100, &r) != RF_STATUS_OK) {
        return 2;
    }
    rf_protocol_free(p);
    if (!(r.fidelity > 0.99 && r.fidelity < 1.0)) {
        return 3;
    }
    RfTableRow rows[12];
    size_t n = 0;
    if (rf_table1(2.0, RF_KAPPA_TABLE, rows, 12, &n) != RF_STATUS_OK || n != 12) {
        return 4;
    }
    if (rf_protocol_from_json("{}", &p) != RF_STATUS_CONFIG || rf_last_error_message() == NULL) {
        return 5;
    }
    printf("%.6f %.1f\n", r.fidelity, rows[9].recoil_frequency_khz);
    return 0;
}
