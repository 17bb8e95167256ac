"""Routes of the channel estimation API: capacity limits, experiment runs and the OpenAPI docs."""
from django.contrib import admin
from django.urls import include, path
from channelest import views
from drf_spectacular.views import SpectacularAPIView, SpectacularSwaggerView, SpectacularRedocView

urlpatterns = [
    path('admin/', admin.site.urls),

    # Swagger/OpenAPI documentation endpoints
    path('api/schema/', SpectacularAPIView.as_view(), name='schema'),
    path('api/docs/', SpectacularSwaggerView.as_view(url_name='schema'), name='swagger-ui'),
    path('api/redoc/', SpectacularRedocView.as_view(url_name='schema'), name='redoc'),

    # Channel estimation API endpoints
    path('api/', include([
        path('limits/', views.limits, name='limits'),

        # Run endpoints
        path('runs/', views.list_runs, name='list_runs'),
        path('runs/create/', views.create_run, name='create_run'),
        path('runs/<int:run_id>/reports/', views.list_reports, name='list_reports'),
        path('runs/<int:run_id>/csv/', views.run_csv, name='run_csv'),
    ])),

    # Root endpoint
    path('', views.index, name='index'),
]
