import json
import logging

from django.http import HttpResponse
from django.shortcuts import get_object_or_404
from drf_spectacular.types import OpenApiTypes
from drf_spectacular.utils import OpenApiParameter, extend_schema
from rest_framework import status
from rest_framework.decorators import api_view, permission_classes
from rest_framework.permissions import IsAuthenticated
from rest_framework.response import Response

from .channel_model import SEUCE, SIUCE
from .exceptions import ChannelEstimationError, ConfigError
from .harness import build_spec, format_csv, parse_config, run_experiment
from .models import ExperimentRun
from .serializers import MSE_VS_RICIAN, MSE_VS_SNR, MSE_VS_USERS
from .training import (
    complexity_seuce, complexity_siuce, k1_max, k2_max, min_pilot_tones, parameter_count, recommend_scheme,
)

logger = logging.getLogger(__name__)

SWEEPS = (MSE_VS_SNR, MSE_VS_RICIAN, MSE_VS_USERS)


def _run_payload(run):
    return {
        "id": run.id,
        "kind": run.kind,
        "scheme": run.scheme,
        "allocation": run.allocation,
        "pattern": run.pattern,
        "master_seed": run.master_seed,
        "trials": run.trials,
        "status": run.status,
        "detail": run.detail,
        "report_count": run.reports.count(),
        "created_at": run.created_at,
        "updated_at": run.updated_at,
    }


@api_view(['GET'])
@permission_classes([])  # Allow anonymous access
def index(request):
    return Response({
        "message": "Welcome to the IRS channel estimation API",
        "endpoints": {
            "admin": "/admin/",
            "api_docs": "/api/docs/",
            "limits": "/api/limits/?N=16&M=8&L=4",
            "runs": "/api/runs/",
        }
    })


@extend_schema(
    tags=['limits'],
    summary="User capacity of both schemes",
    description="K1 and K2 for the given dimensions, with per-scheme parameter counts, "
                "pilot tone minimums and estimator complexity. Passing K also returns the recommended scheme.",
    parameters=[
        OpenApiParameter('N', OpenApiTypes.INT, OpenApiParameter.QUERY, required=True),
        OpenApiParameter('M', OpenApiTypes.INT, OpenApiParameter.QUERY, required=True),
        OpenApiParameter('L', OpenApiTypes.INT, OpenApiParameter.QUERY, required=True),
        OpenApiParameter('K', OpenApiTypes.INT, OpenApiParameter.QUERY, required=False),
    ],
    responses={
        200: {
            'description': 'Capacity limits',
            'type': 'object',
            'properties': {
                'K1': {'type': 'integer'},
                'K2': {'type': 'integer'},
                'recommended_scheme': {'type': 'string'},
            }
        },
        400: {'description': 'Bad request - missing or invalid dimensions'},
    }
)
@api_view(['GET'])
@permission_classes([])
def limits(request):
    try:
        N, M, L = (int(request.query_params[name]) for name in ('N', 'M', 'L'))
        K = int(request.query_params['K']) if 'K' in request.query_params else None
    except KeyError as exc:
        return Response({"detail": f"Query parameter {exc.args[0]} is required."}, status=status.HTTP_400_BAD_REQUEST)
    except ValueError:
        return Response({"detail": "N, M, L and K must be integers."}, status=status.HTTP_400_BAD_REQUEST)

    try:
        K1, K2 = k1_max(N, L), k2_max(N, M, L)
        users = K if K is not None else K2
        payload = {
            "N": N, "M": M, "L": L,
            "K1": K1,
            "K2": K2,
            "min_pilot_tones": {
                SIUCE: min_pilot_tones(SIUCE, M, L),
                "seuce_reference": min_pilot_tones(SEUCE, M, L, reference=True),
                "seuce_non_reference": min_pilot_tones(SEUCE, M, L),
            },
            "parameter_count": {
                SIUCE: parameter_count(SIUCE, users, M, L),
                SEUCE: parameter_count(SEUCE, users, M, L),
            },
            "complexity": {
                SIUCE: complexity_siuce(M, L),
                SEUCE: complexity_seuce(M, L, users),
            },
        }
        if K is not None:
            payload["K"] = K
            payload["recommended_scheme"] = recommend_scheme(K, N, M, L)
    except ChannelEstimationError as exc:
        return Response({"detail": str(exc)}, status=status.HTTP_400_BAD_REQUEST)
    return Response(payload)


@extend_schema(
    tags=['runs'],
    summary="List experiment runs",
    description="Retrieve every stored experiment run, newest first. User must be authenticated.",
)
@api_view(['GET'])
@permission_classes([IsAuthenticated])
def list_runs(request):
    runs = ExperimentRun.objects.order_by('-created_at')
    return Response([_run_payload(run) for run in runs])


@extend_schema(
    tags=['runs'],
    summary="Run an experiment",
    description="Validate an experiment spec, run the Monte-Carlo sweep synchronously and store its reports. "
                "The body is either a JSON spec or {'config': '<key = value text>'}.",
    request={
        'application/json': {
            'type': 'object',
            'properties': {
                'config': {'type': 'string', 'description': 'Flat key = value config text'},
                'experiment': {'type': 'string'},
                'scheme': {'type': 'string'},
                'snr_db': {'type': 'array', 'items': {'type': 'number'}},
                'trials': {'type': 'integer'},
            }
        }
    },
    responses={
        201: {'description': 'Run finished and stored'},
        400: {'description': 'Bad request - invalid or infeasible spec'},
    }
)
@api_view(['POST'])
@permission_classes([IsAuthenticated])
def create_run(request):
    data = dict(request.data)
    try:
        if 'config' in data:
            config_text = data['config']
            spec = parse_config(config_text)
        else:
            config_text = "\n".join(f"{key} = {json.dumps(value)}" for key, value in data.items())
            spec = build_spec(data)
    except ConfigError as exc:
        return Response({"detail": str(exc), "errors": exc.errors}, status=status.HTTP_400_BAD_REQUEST)

    if spec.experiment not in SWEEPS:
        return Response(
            {"detail": f"{spec.experiment} runs from the command line only."},
            status=status.HTTP_400_BAD_REQUEST,
        )
    try:
        reports = run_experiment(spec)
    except ChannelEstimationError as exc:
        return Response({"detail": str(exc)}, status=status.HTTP_400_BAD_REQUEST)

    run = ExperimentRun.record(spec, reports, config_text=config_text, owner=request.user)
    logger.info("stored run %s with %d reports", run.id, len(reports))
    return Response(_run_payload(run), status=status.HTTP_201_CREATED)


@extend_schema(
    tags=['runs'],
    summary="List the reports of a run",
    description="One entry per (grid point, design) in run order.",
)
@api_view(['GET'])
@permission_classes([IsAuthenticated])
def list_reports(request, run_id):
    run = get_object_or_404(ExperimentRun, id=run_id)
    return Response([{
        "position": record.position,
        "scheme": record.scheme,
        "allocation": record.allocation,
        "pattern": record.pattern,
        "snr_db": record.snr_db,
        "kappa_db": record.kappa_db,
        "K": record.K,
        "trials": record.trials,
        "mse_empirical": record.mse_empirical,
        "mse_analytic": record.mse_analytic,
        "stderr": record.stderr,
        "diagnostic": record.diagnostic,
    } for record in run.reports.all()])


@extend_schema(
    tags=['runs'],
    summary="Download a run as CSV",
    responses={200: OpenApiTypes.STR},
)
@api_view(['GET'])
@permission_classes([IsAuthenticated])
def run_csv(request, run_id):
    run = get_object_or_404(ExperimentRun, id=run_id)
    text = format_csv([record.to_report() for record in run.reports.select_related('run')])
    response = HttpResponse(text, content_type='text/csv')
    response['Content-Disposition'] = f'attachment; filename="run-{run.id}.csv"'
    return response
