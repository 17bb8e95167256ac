from django.conf import settings
from rest_framework import serializers

from .channel_model import SCHEMES, SEUCE, SIUCE, SystemConfig
from .exceptions import ChannelEstimationError
from .training import (
    ADJACENT, ALLOCATION_KINDS, DFT, EQUISPACED, PATTERN_KINDS, PERMUTED, TWO_STEP, k1_max, k2_max,
)

MSE_VS_SNR = "mse_vs_snr"
MSE_VS_RICIAN = "mse_vs_rician"
MSE_VS_USERS = "mse_vs_users"
P2_SEARCH = "p2_search"
INVARIANT_SUITE = "invariant_suite"
EXPERIMENTS = (MSE_VS_SNR, MSE_VS_RICIAN, MSE_VS_USERS, P2_SEARCH, INVARIANT_SUITE)

PROPOSED = "proposed"
BENCHMARK = "benchmark"

PRESETS = {
    "siuce_frequency_selective": {"L1": 3, "L2": 2},
    "seuce_los": {"L1": 4, "L2": 1},
}

DEFAULTS = {
    "N": 16,
    "M": 8,
    "M0": 128,
    "Ld": 4,
    "Lcp": 6,
    "decay": 2.0,
    "kappa_db": 4.5,
    "sigma2_dbm": -80.0,
    "gamma0_db": -30.0,
    "alpha1": 2.2,
    "alpha2": 2.4,
    "alpha3": 3.5,
    "D1": 1.5,
    "D2": 50.0,
    "user_angle_deg": 90.0,
    "trials": 10000,
    "seed": 2020,
    "n_samples": 1000,
    "n_draws": 1000,
    "cap": 10**6,
    "threads": 1,
}

GRID_DEFAULTS = {
    MSE_VS_SNR: {"snr_db": [0.0, 5.0, 10.0, 15.0, 20.0]},
    MSE_VS_RICIAN: {"snr_db": [20.0], "kappa_db": [float(k) for k in range(0, 45, 5)]},
    MSE_VS_USERS: {"snr_db": [10.0]},
    P2_SEARCH: {"snr_db": [10.0]},
    INVARIANT_SUITE: {"snr_db": [10.0]},
}


def expand_zetas(zeta, K):
    """Per non-reference user tone budgets; a single value applies to all of them."""
    if len(zeta) == 1:
        return list(zeta) * (K - 1)
    if len(zeta) != K - 1:
        raise serializers.ValidationError({"zeta": [f"expected 1 or {K - 1} values, got {len(zeta)}."]})
    return list(zeta)


def scenario_defaults():
    """Built-in scenario constants overlaid with the IRSCE settings dict."""
    merged = dict(DEFAULTS)
    merged.update(getattr(settings, "IRSCE", {}))
    return merged


class ScalarOrListField(serializers.ListField):
    """Accepts either one value or a list of values; always yields a list."""

    def to_internal_value(self, data):
        if not isinstance(data, (list, tuple)):
            data = [data]
        return super().to_internal_value(data)


class ExperimentSpecSerializer(serializers.Serializer):
    experiment = serializers.ChoiceField(choices=EXPERIMENTS, default=MSE_VS_SNR)
    scheme = serializers.ChoiceField(choices=SCHEMES, required=False)
    preset = serializers.ChoiceField(choices=tuple(PRESETS), required=False)
    allocation = serializers.ChoiceField(choices=ALLOCATION_KINDS, required=False)
    pattern = serializers.ChoiceField(choices=PATTERN_KINDS, default=DFT)
    designs = serializers.ListField(child=serializers.CharField(), required=False, allow_empty=False)

    N = serializers.IntegerField(min_value=1, required=False)
    M = serializers.IntegerField(min_value=1, required=False)
    M0 = serializers.IntegerField(min_value=0, required=False)
    Ld = serializers.IntegerField(min_value=1, required=False)
    L1 = serializers.IntegerField(min_value=1, required=False)
    L2 = serializers.IntegerField(min_value=1, required=False)
    Lcp = serializers.IntegerField(min_value=0, required=False)
    K = serializers.IntegerField(min_value=1, required=False)
    decay = serializers.FloatField(min_value=1e-9, required=False)

    kappa_db = ScalarOrListField(child=serializers.FloatField(), required=False, allow_empty=False)
    snr_db = ScalarOrListField(child=serializers.FloatField(), required=False, allow_empty=False)
    users = ScalarOrListField(child=serializers.IntegerField(min_value=1), required=False, allow_empty=False)
    sigma2_dbm = serializers.FloatField(required=False)

    L_p = serializers.IntegerField(min_value=1, required=False)
    ref_tones = serializers.ListField(child=serializers.IntegerField(min_value=0), required=False, allow_empty=False)
    zeta = ScalarOrListField(child=serializers.IntegerField(min_value=1), required=False, allow_empty=False)

    trials = serializers.IntegerField(min_value=1, required=False)
    seed = serializers.IntegerField(min_value=0, max_value=2**64 - 1, required=False)
    out = serializers.CharField(required=False, allow_blank=True)
    threads = serializers.IntegerField(min_value=1, required=False)

    D1 = serializers.FloatField(required=False)
    D2 = serializers.FloatField(required=False)
    alpha1 = serializers.FloatField(required=False)
    alpha2 = serializers.FloatField(required=False)
    alpha3 = serializers.FloatField(required=False)
    gamma0_db = serializers.FloatField(required=False)
    user_angle_deg = serializers.FloatField(min_value=0.0, max_value=180.0, required=False)

    reference_mode = serializers.ChoiceField(choices=("estimated", "oracle"), default="estimated")
    metric = serializers.ChoiceField(choices=("normalized", "raw"), default="normalized")
    n_samples = serializers.IntegerField(min_value=1, required=False)
    n_draws = serializers.IntegerField(min_value=1, required=False)
    cap = serializers.IntegerField(min_value=1, required=False)

    def to_internal_value(self, data):
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)

    def validate(self, attrs):
        data = scenario_defaults()
        experiment = attrs["experiment"]
        data.update(GRID_DEFAULTS[experiment])

        scheme = attrs.get("scheme", SIUCE)
        if "preset" in attrs:
            preset = attrs["preset"]
        elif experiment == MSE_VS_RICIAN:
            preset = "siuce_frequency_selective"
        elif experiment == MSE_VS_USERS or scheme == SEUCE:
            preset = "seuce_los"
        else:
            preset = "siuce_frequency_selective"
        data.update(PRESETS[preset])
        data.update({key: value for key, value in attrs.items() if value is not None})
        data["scheme"] = scheme
        data["preset"] = preset
        if not isinstance(data["kappa_db"], list):
            data["kappa_db"] = [data["kappa_db"]]

        config = self._system_config(data, scheme)
        L = config.L
        N, M = data["N"], data["M"]
        K1, K2 = k1_max(N, L), k2_max(N, M, L)
        data["L"] = L

        if "L_p" not in attrs:
            data["L_p"] = next(p for p in range(L, N + 1) if N % p == 0)
        if data["L_p"] < L:
            raise serializers.ValidationError({"L_p": [f"L_p={data['L_p']} is below L={L}."]})

        if "K" in attrs:
            K = attrs["K"]
        else:
            K = K1 if scheme == SIUCE else K2
        if experiment == MSE_VS_USERS:
            if "users" not in attrs:
                data["users"] = list(range(1, K2 + 1))
            too_many = [k for k in data["users"] if k > K2]
            if too_many:
                raise serializers.ValidationError({"users": [f"K={too_many[0]} exceeds K2={K2}."]})
        elif K > K2:
            raise serializers.ValidationError({"K": [f"K={K} exceeds K2={K2}, the most users either scheme supports."]})
        elif scheme == SIUCE and K > K1:
            raise serializers.ValidationError({"K": [f"K={K} exceeds K1={K1} for siuce; use scheme = seuce."]})
        data["K"] = K

        if "ref_tones" not in attrs:
            data["ref_tones"] = list(range(0, N, N // data["L_p"]))[: data["L_p"]]
        if any(n >= N for n in data["ref_tones"]):
            raise serializers.ValidationError({"ref_tones": [f"tone indices must be below N={N}."]})
        data["zeta"] = list(data.get("zeta", [M + L]))
        if scheme == SEUCE and experiment in (MSE_VS_SNR, MSE_VS_RICIAN):
            zetas = expand_zetas(data["zeta"], K)
            free = (M + 1) * (N - len(set(data["ref_tones"])))
            if sum(zetas) > free:
                raise serializers.ValidationError(
                    {"zeta": [f"{sum(zetas)} pilot tones requested but only {free} are free."]}
                )

        data["designs"] = self._designs(data, attrs, experiment, scheme)
        return data

    def _system_config(self, data, scheme):
        try:
            return SystemConfig(
                N=data["N"], M=data["M"], M0=data["M0"], Ld=data["Ld"], L1=data["L1"], L2=data["L2"],
                Lcp=data["Lcp"], K=1, decay=data["decay"], scheme=scheme,
            )
        except ChannelEstimationError as exc:
            raise serializers.ValidationError({"non_field_errors": [str(exc)]}) from exc

    def _designs(self, data, attrs, experiment, scheme):
        if experiment == MSE_VS_USERS:
            designs = attrs.get("designs", [PROPOSED])
            bad = [d for d in designs if d not in (PROPOSED, BENCHMARK)]
            if bad:
                raise serializers.ValidationError({"designs": [f"{bad[0]!r} is not proposed or benchmark."]})
            return [(d, data["pattern"]) for d in designs]
        if "designs" in attrs:
            designs = []
            for entry in attrs["designs"]:
                allocation, _, pattern = entry.partition("/")
                pattern = pattern or data["pattern"]
                if allocation not in ALLOCATION_KINDS or pattern not in PATTERN_KINDS:
                    raise serializers.ValidationError({"designs": [f"{entry!r} is not an allocation/pattern pair."]})
                designs.append((allocation, pattern))
        else:
            allocation = attrs.get("allocation") or (EQUISPACED if scheme == SIUCE else TWO_STEP)
            designs = [(allocation, data["pattern"])]
        allowed = (EQUISPACED, ADJACENT) if scheme == SIUCE else (TWO_STEP, PERMUTED)
        wrong = [a for a, _ in designs if a not in allowed]
        if wrong and experiment in (MSE_VS_SNR, MSE_VS_RICIAN):
            raise serializers.ValidationError({"designs": [f"allocation {wrong[0]!r} does not apply to {scheme}."]})
        return designs
