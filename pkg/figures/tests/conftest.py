import numpy as np
import pytest

REPORT_HEADER = (
    "# schema: cerdec-report-1\n"
    "bin_lo,bin_hi,count,mean_eps,mean_logical,K,median_gain,q1,q3\n"
)
RECORDS_HEADER = (
    "# schema: cerdec-records-1\n"
    "channel_id,channel_hash,eps_physical,policy,K,w,r_ref,r_ref_stderr,"
    "r_dec,r_dec_stderr,gain,gain_stderr,tvd_partial,tvd_completed,alpha,"
    "n_samples,skipped_fraction\n"
)
CONV_HEADER = "# schema: cerdec-convergence-1\nseries,n_samples,r_hat,stderr\n"
TVD_HEADER = (
    "# schema: cerdec-tvd-1\n"
    "bin_lo,bin_hi,count,mean_eps,tvd_partial,tvd_completed\n"
)

BIN_EDGES = [(1e-4, 1e-3), (1e-3, 1e-2), (1e-2, 1e-1), (1e-1, 1.0)]
K_VALUES = [1, 22, 163, 1156]


@pytest.fixture(scope="session")
def golden_report(tmp_path_factory):
    path = tmp_path_factory.mktemp("golden") / "report.csv"
    rng = np.random.default_rng(0)
    lines = [REPORT_HEADER]
    for b, (lo, hi) in enumerate(BIN_EDGES):
        mean_eps = float(np.sqrt(lo * hi))
        for k in K_VALUES:
            med = 1.0 if k == 1 else float(2.0 + 2.5 * np.log10(k) + 0.3 * b)
            q1, q3 = med * 0.6, med * 1.8
            lines.append(
                f"{lo!r},{hi!r},6,{mean_eps!r},{mean_eps**2!r},{k},"
                f"{med!r},{q1!r},{q3!r}\n"
            )
    path.write_text("".join(lines))
    return str(path)


@pytest.fixture(scope="session")
def golden_records(tmp_path_factory):
    path = tmp_path_factory.mktemp("golden") / "records.csv"
    rng = np.random.default_rng(1)
    lines = [RECORDS_HEADER]
    cid = 0
    for lo, hi in BIN_EDGES:
        for _ in range(6):
            eps = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
            for k in K_VALUES:
                gain = 1.0 if k == 1 else float(rng.lognormal(np.log(5), 0.5))
                lines.append(
                    f"chan_{cid:03d},sha256:0,{eps!r},top_k,{k},,1e-06,1e-08,"
                    f"{1e-06 / gain!r},1e-08,{gain!r},0.05,0.01,0.005,0.4,"
                    f"2000,0.0\n"
                )
            cid += 1
    path.write_text("".join(lines))
    return str(path)


@pytest.fixture(scope="session")
def golden_convergence(tmp_path_factory):
    path = tmp_path_factory.mktemp("golden") / "convergence.csv"
    lines = [CONV_HEADER]
    truth = 1e-6
    # direct sampling: stderr shrinks as 1/sqrt(N) from a large per-sample sigma
    for n in (1000, 10000, 100000):
        lines.append(f"direct,{n},{float(truth * (1 + 100 / np.sqrt(n)))!r},"
                     f"{float(truth * 300 / np.sqrt(n))!r}\n")
    # flattened proposal reaches the same stderr with 100x fewer samples
    for n in (10, 100, 1000):
        lines.append(f"importance,{n},{float(truth * (1 + 10 / np.sqrt(n)))!r},"
                     f"{float(truth * 29 / np.sqrt(n))!r}\n")
    path.write_text("".join(lines))
    return str(path)


@pytest.fixture(scope="session")
def golden_tvd(tmp_path_factory):
    path = tmp_path_factory.mktemp("golden") / "tvd.csv"
    lines = [TVD_HEADER]
    for lo, hi in BIN_EDGES:
        eps = float(np.sqrt(lo * hi))
        lines.append(f"{lo!r},{hi!r},6,{eps!r},{float(eps / 5)!r},{eps!r}\n")
    lines.append("# note: no ordering asserted between the two columns.\n")
    path.write_text("".join(lines))
    return str(path)
