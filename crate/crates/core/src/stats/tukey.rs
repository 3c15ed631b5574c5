use crate::{Error, Result};

/// Upper 5% points of the studentized range for `k = 2..=10` groups, by
/// error degrees of freedom.
const Q05: [(f64, [f64; 9]); 35] = [
    (
        2.0,
        [
            6.0849, 8.3308, 9.7980, 10.8811, 11.7343, 12.4349, 13.0273, 13.5390, 13.9885,
        ],
    ),
    (
        3.0,
        [
            4.5007, 5.9096, 6.8245, 7.5017, 8.0371, 8.4783, 8.8525, 9.1766, 9.4620,
        ],
    ),
    (
        4.0,
        [
            3.9265, 5.0402, 5.7571, 6.2870, 6.7064, 7.0526, 7.3465, 7.6015, 7.8263,
        ],
    ),
    (
        5.0,
        [
            3.6354, 4.6017, 5.2183, 5.6731, 6.0329, 6.3299, 6.5823, 6.8014, 6.9947,
        ],
    ),
    (
        6.0,
        [
            3.4605, 4.3392, 4.8956, 5.3049, 5.6284, 5.8953, 6.1222, 6.3192, 6.4931,
        ],
    ),
    (
        7.0,
        [
            3.3441, 4.1649, 4.6813, 5.0601, 5.3591, 5.6057, 5.8153, 5.9973, 6.1579,
        ],
    ),
    (
        8.0,
        [
            3.2612, 4.0410, 4.5288, 4.8858, 5.1672, 5.3991, 5.5962, 5.7673, 5.9183,
        ],
    ),
    (
        9.0,
        [
            3.1992, 3.9485, 4.4149, 4.7554, 5.0235, 5.2444, 5.4319, 5.5947, 5.7384,
        ],
    ),
    (
        10.0,
        [
            3.1511, 3.8768, 4.3266, 4.6543, 4.9120, 5.1242, 5.3042, 5.4605, 5.5984,
        ],
    ),
    (
        11.0,
        [
            3.1127, 3.8196, 4.2561, 4.5736, 4.8230, 5.0281, 5.2021, 5.3531, 5.4863,
        ],
    ),
    (
        12.0,
        [
            3.0813, 3.7729, 4.1987, 4.5077, 4.7502, 4.9496, 5.1187, 5.2653, 5.3946,
        ],
    ),
    (
        13.0,
        [
            3.0552, 3.7341, 4.1509, 4.4529, 4.6897, 4.8842, 5.0491, 5.1921, 5.3181,
        ],
    ),
    (
        14.0,
        [
            3.0332, 3.7014, 4.1105, 4.4066, 4.6385, 4.8290, 4.9903, 5.1301, 5.2534,
        ],
    ),
    (
        15.0,
        [
            3.0143, 3.6734, 4.0760, 4.3670, 4.5947, 4.7816, 4.9399, 5.0770, 5.1979,
        ],
    ),
    (
        16.0,
        [
            2.9980, 3.6491, 4.0461, 4.3327, 4.5568, 4.7406, 4.8962, 5.0310, 5.1498,
        ],
    ),
    (
        17.0,
        [
            2.9837, 3.6280, 4.0200, 4.3027, 4.5237, 4.7048, 4.8580, 4.9907, 5.1077,
        ],
    ),
    (
        18.0,
        [
            2.9712, 3.6093, 3.9970, 4.2763, 4.4944, 4.6731, 4.8243, 4.9552, 5.0705,
        ],
    ),
    (
        19.0,
        [
            2.9600, 3.5927, 3.9766, 4.2528, 4.4685, 4.6450, 4.7944, 4.9236, 5.0375,
        ],
    ),
    (
        20.0,
        [
            2.9500, 3.5779, 3.9583, 4.2319, 4.4452, 4.6199, 4.7676, 4.8954, 5.0079,
        ],
    ),
    (
        21.0,
        [
            2.9410, 3.5646, 3.9419, 4.2130, 4.4244, 4.5973, 4.7435, 4.8699, 4.9813,
        ],
    ),
    (
        22.0,
        [
            2.9329, 3.5526, 3.9270, 4.1959, 4.4055, 4.5769, 4.7217, 4.8469, 4.9572,
        ],
    ),
    (
        23.0,
        [
            2.9255, 3.5417, 3.9136, 4.1805, 4.3883, 4.5583, 4.7018, 4.8260, 4.9353,
        ],
    ),
    (
        24.0,
        [
            2.9188, 3.5317, 3.9013, 4.1663, 4.3727, 4.5413, 4.6838, 4.8069, 4.9152,
        ],
    ),
    (
        25.0,
        [
            2.9126, 3.5226, 3.8900, 4.1534, 4.3583, 4.5258, 4.6672, 4.7894, 4.8969,
        ],
    ),
    (
        26.0,
        [
            2.9070, 3.5142, 3.8796, 4.1415, 4.3451, 4.5115, 4.6519, 4.7733, 4.8800,
        ],
    ),
    (
        27.0,
        [
            2.9017, 3.5064, 3.8701, 4.1305, 4.3329, 4.4983, 4.6378, 4.7584, 4.8644,
        ],
    ),
    (
        28.0,
        [
            2.8969, 3.4993, 3.8612, 4.1203, 4.3217, 4.4861, 4.6248, 4.7446, 4.8500,
        ],
    ),
    (
        29.0,
        [
            2.8924, 3.4926, 3.8530, 4.1109, 4.3112, 4.4747, 4.6127, 4.7318, 4.8366,
        ],
    ),
    (
        30.0,
        [
            2.8882, 3.4864, 3.8454, 4.1021, 4.3015, 4.4642, 4.6014, 4.7199, 4.8241,
        ],
    ),
    (
        40.0,
        [
            2.8582, 3.4421, 3.7907, 4.0391, 4.2316, 4.3885, 4.5205, 4.6345, 4.7345,
        ],
    ),
    (
        50.0,
        [
            2.8405, 3.4159, 3.7584, 4.0020, 4.1904, 4.3437, 4.4727, 4.5839, 4.6814,
        ],
    ),
    (
        60.0,
        [
            2.8288, 3.3987, 3.7371, 3.9774, 4.1632, 4.3141, 4.4411, 4.5504, 4.6463,
        ],
    ),
    (
        80.0,
        [
            2.8144, 3.3773, 3.7107, 3.9470, 4.1294, 4.2775, 4.4019, 4.5089, 4.6028,
        ],
    ),
    (
        100.0,
        [
            2.8058, 3.3646, 3.6950, 3.9289, 4.1093, 4.2557, 4.3785, 4.4842, 4.5768,
        ],
    ),
    (
        120.0,
        [
            2.8000, 3.3561, 3.6846, 3.9169, 4.0960, 4.2412, 4.3630, 4.4678, 4.5595,
        ],
    ),
];

const Q05_INF: [f64; 9] = [
    2.7718, 3.3145, 3.6332, 3.8577, 4.0301, 4.1696, 4.2863, 4.3865, 4.4741,
];

pub const TUKEY_MAX_GROUPS: usize = 10;

/// Critical studentized range at alpha 0.05 for `k` groups and `df` error
/// degrees of freedom. Interpolates linearly in `df` between table rows and
/// linearly in `1/df` beyond the last finite row.
pub fn q_crit_05(k: usize, df: f64) -> Result<f64> {
    if !(2..=TUKEY_MAX_GROUPS).contains(&k) {
        return Err(Error::Argument(format!(
            "studentized range table covers 2..={TUKEY_MAX_GROUPS} groups, got {k}"
        )));
    }
    if !(df >= 2.0) {
        return Err(Error::Argument(format!(
            "error degrees of freedom {df} below 2"
        )));
    }
    let c = k - 2;
    let last = Q05[Q05.len() - 1];
    if df >= last.0 {
        if df.is_infinite() {
            return Ok(Q05_INF[c]);
        }
        let w = (1.0 / last.0 - 1.0 / df) / (1.0 / last.0);
        return Ok(last.1[c] + w * (Q05_INF[c] - last.1[c]));
    }
    let hi = Q05
        .iter()
        .position(|r| r.0 >= df)
        .expect("df below last row");
    if Q05[hi].0 == df {
        return Ok(Q05[hi].1[c]);
    }
    let (d0, r0) = Q05[hi - 1];
    let (d1, r1) = Q05[hi];
    let w = (df - d0) / (d1 - d0);
    Ok(r0[c] + w * (r1[c] - r0[c]))
}
