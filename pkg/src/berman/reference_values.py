"""Published reference values the studies compare against.

Monte Carlo entries are ``(value, half_width95)``.
"""

HURST_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

# E[eps_delta(Y)] for sigma2(t) = 2|t|^(2H), keyed by (hurst, delta)
TABLE1 = {
    **dict(zip(((h, 0.0) for h in HURST_GRID), (
        60480, 72.216267, 12.309822, 5.866446, 4, 3.198992, 2.777685, 2.527405, 2.366354, 2.256758))),
    **dict(zip(((h, 1.0) for h in HURST_GRID), (
        48824.040913, 72.594979, 12.632020, 6.140195, 4.232120, 3.395236, 2.942920, 2.665777, 2.481422, 2.351603))),
    **dict(zip(((h, 5.0) for h in HURST_GRID), (
        57667.986631, 74.736598, 14.803952, 8.344951, 6.474827, 5.685059, 5.295399, 5.104008, 5.026130, 5.004070))),
    **dict(zip(((h, 10.0) for h in HURST_GRID), (
        59291.12614, 77.87128, 18.22637, 12.07630, 10.54057, 10.09794, 10.00788, 10.00016, 10, 10))),
}

# Berman function of fBm, keyed by (hurst, x); window [-64, 64], step 2^-9, N = 20000
TABLE2_HURST = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.999)
_T2 = {
    0.0: ((1.016664, 0.08504517), (1.038244, 0.08105526), (0.9336774, 0.08679748), (0.8059135, 0.04206874),
          (0.7146539, 0.01835475), (0.6482967, 0.01264331), (0.5644909, 0.00675525)),
    0.05: ((0.7319381, 0.02164056), (0.7662378, 0.02001129), (0.77076, 0.0188357), (0.7419288, 0.01654269),
           (0.6972516, 0.01375789), (0.641973, 0.01041449), (0.5660913, 0.006183973)),
    0.1: ((0.6285574, 0.01509329), (0.6975815, 0.01508846), (0.7083258, 0.01388002), (0.6965521, 0.01262112),
          (0.670074, 0.01129947), (0.6275897, 0.008966844), (0.5638993, 0.005561737)),
    0.2: ((0.5210044, 0.01018901), (0.5855574, 0.01005615), (0.6169511, 0.009730012), (0.6341507, 0.009250254),
          (0.6143437, 0.008171438), (0.5951561, 0.007041064), (0.5601536, 0.004994959)),
    0.4: ((0.3996749, 0.00644895), (0.4631784, 0.006531524), (0.5050474, 0.006421914), (0.5339913, 0.006178146),
          (0.5503154, 0.005904937), (0.5457671, 0.005230998), (0.5397937, 0.004207075)),
    0.5: ((0.3523235, 0.005388992), (0.4228112, 0.005689292), (0.4642559, 0.005635201), (0.4931276, 0.005447861),
          (0.5079599, 0.005075071), (0.5182281, 0.004643272), (0.5306746, 0.003954409)),
    1.0: ((0.2390332, 0.003261513), (0.2833468, 0.00342165), (0.3098104, 0.003471659), (0.3418117, 0.003439146),
          (0.3673532, 0.003371701), (0.3978701, 0.003232641), (0.4387592, 0.002982276)),
    2.0: ((0.1373955, 0.001904439), (0.1493499, 0.002068819), (0.1606709, 0.002168721), (0.1731576, 0.002275878),
          (0.1824689, 0.002382227), (0.1975992, 0.002493246), (0.2061034, 0.00260955)),
    5.0: ((0.04407294, 0.0008552848), (0.0366231, 0.0008681481), (0.02843742, 0.0008307949),
          (0.02065171, 0.0007567421), (0.01204482, 0.0006104972), (0.004497369, 0.0003907966),
          (0.001105259, 0.0001991857)),
    6.0: ((0.03259252, 0.0007073306), (0.02488601, 0.0006875452), (0.01711836, 0.000618167),
          (0.01001073, 0.0005032682), (0.003932873, 0.0003303923), (0.0006936917, 0.0001440762),
          (6.375708e-05, 4.42043e-05)),
}
TABLE2 = {(h, x): cell for x, row in _T2.items() for h, cell in zip(TABLE2_HURST, row)}

# Integrated OU, x = 0, keyed by delta; window [-15, 15], step 1e-5, N = 20000
TABLE3 = {
    0.0: (0.5267956, 0.01817717),
    0.1: (0.5131973, 0.007850686),
    0.2: (0.5126575, 0.007194036),
    0.5: (0.4934096, 0.005746635),
    1.0: (0.4484668, 0.00402201),
    2.0: (0.3843544, 0.001995524),
    5.0: (0.1908583, 0.0004065713),
    10.0: (0.09984, 3.913749e-05),
}

# Integrated OU Berman function, delta = 0, keyed by x
TABLE4 = {
    0.0: (0.5267956, 0.01817717), 0.5: (0.452556, 0.004676632), 1.0: (0.3482289, 0.003180162),
    1.5: (0.2621687, 0.002588018), 2.0: (0.1900299, 0.002216284), 2.5: (0.1376086, 0.001910763),
    3.0: (0.09881259, 0.00163841), 4.0: (0.05088893, 0.00116684), 5.0: (0.02715927, 0.0008278098),
    6.0: (0.01433577, 0.0005788133), 7.0: (0.007437053, 0.0003983809), 8.0: (0.003796336, 0.0002730899),
    9.0: (0.001998398, 0.0001906838), 10.0: (0.001205136, 0.0001414664), 11.0: (0.000631948, 9.837308e-05),
    12.0: (0.0003812784, 7.355149e-05), 13.0: (0.0001845301, 4.89203e-05), 14.0: (0.00010499, 3.593126e-05),
    15.0: (9.130422e-05, 3.276786e-05), 16.0: (2.426165e-05, 1.594309e-05), 17.0: (2.103512e-05, 1.463212e-05),
}

# Integrated OU: delta -> (E[eps_delta], 1 / E[eps_delta])
TABLE5 = {
    0.0: (3.234658, 0.3091517),
    0.1: (3.245584, 0.308111),
    0.2: (3.248405, 0.3078434),
    0.5: (3.268183, 0.3059804),
    1.0: (3.339158, 0.2994767),
    2.0: (3.626068, 0.2757808),
    5.0: (5.482154, 0.1824101),
    10.0: (10.05426, 0.09946035),
}
