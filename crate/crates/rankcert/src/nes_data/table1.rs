//! Built-in 2018 reference table: per-country expert counts, composite-index
//! means, and sample standard deviations for the 54-country cross section.
//! Standard errors are derived as sd/sqrt(n) at construction time.

/// (country, expert count, index mean, sample sd), in descending mean order.
pub(crate) const TABLE1: [(&str, usize, f64, f64); 54] = [
    ("Indonesia", 24, 6.123, 1.497),
    ("Canada", 3, 6.105, 0.352),
    ("Qatar", 25, 6.040, 1.073),
    ("Netherlands", 15, 5.959, 0.946),
    ("Taiwan", 25, 5.856, 1.301),
    ("India", 36, 5.724, 1.421),
    ("USA", 17, 5.368, 1.396),
    ("France", 17, 5.322, 0.903),
    ("United Kingdom", 7, 5.217, 0.824),
    ("Ireland", 17, 5.041, 1.185),
    ("Spain", 25, 4.999, 0.998),
    ("Luxembourg", 10, 4.996, 1.610),
    ("Latvia", 14, 4.971, 1.086),
    ("Austria", 19, 4.937, 0.915),
    ("United Arab Emirates", 12, 4.887, 1.694),
    ("Thailand", 16, 4.859, 1.497),
    ("South Korea", 79, 4.846, 0.954),
    ("Slovenia", 22, 4.799, 0.806),
    ("China (PRC)", 28, 4.798, 0.802),
    ("Israel", 17, 4.788, 1.025),
    ("Cyprus", 28, 4.772, 0.982),
    ("Poland", 22, 4.769, 0.703),
    ("Switzerland", 15, 4.763, 1.284),
    ("Japan", 30, 4.725, 0.873),
    ("Sweden", 11, 4.677, 0.778),
    ("Germany", 24, 4.670, 1.039),
    ("Turkey", 32, 4.670, 1.147),
    ("Mexico", 25, 4.646, 1.157),
    ("Chile", 24, 4.640, 0.997),
    ("Argentina", 24, 4.627, 0.841),
    ("Bulgaria", 21, 4.329, 1.182),
    ("Kazakhstan", 20, 4.320, 1.279),
    ("Greece", 23, 4.292, 1.107),
    ("Colombia", 30, 4.280, 1.120),
    ("Lebanon", 18, 4.235, 0.750),
    ("Uruguay", 18, 4.188, 1.096),
    ("Egypt", 27, 4.187, 1.125),
    ("Slovak Republic", 21, 4.129, 0.693),
    ("Italy", 27, 4.060, 1.035),
    ("Dominican Republic", 27, 3.872, 0.694),
    ("Peru", 22, 3.868, 1.045),
    ("Brazil", 24, 3.847, 1.102),
    ("Morocco", 34, 3.827, 0.887),
    ("Guatemala", 23, 3.799, 1.070),
    ("Saudi Arabia", 24, 3.792, 0.726),
    ("Iran", 36, 3.771, 0.921),
    ("Russia", 19, 3.758, 1.095),
    ("Panama", 21, 3.637, 0.842),
    ("Puerto Rico", 20, 3.578, 0.959),
    ("Sudan", 13, 3.575, 0.942),
    ("Madagascar", 24, 3.501, 0.741),
    ("Croatia", 22, 3.443, 0.942),
    ("Angola", 13, 3.269, 0.979),
    ("Mozambique", 5, 2.541, 0.611),
];
