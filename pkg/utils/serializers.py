from rest_framework import serializers

MAX_SEED = 2 ** 64 - 1


class PipelineConfigSerializer(serializers.Serializer):
    input = serializers.ListField(child=serializers.CharField(), required=False, default=list)
    out = serializers.CharField()
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED)
    cap = serializers.IntegerField(min_value=1)
    folds = serializers.IntegerField(min_value=2)
    max_n = serializers.IntegerField(min_value=2)
    min_preverbal = serializers.IntegerField(min_value=1)
    require_projective = serializers.BooleanField()
    root_upos = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    count_punct = serializers.BooleanField()
    min_corpus_sentences = serializers.IntegerField(min_value=0)
    workers = serializers.IntegerField(min_value=1)
    corpus_label = serializers.CharField(required=False, allow_blank=True, default='')

    def to_internal_value(self, data):
        # List values may arrive comma-joined from flags or the environment
        data = dict(data)
        for key in ('input', 'root_upos'):
            if isinstance(data.get(key), str):
                data[key] = [item.strip() for item in data[key].split(',') if item.strip()]
        return super().to_internal_value(data)

    def validate_root_upos(self, value):
        return sorted({tag.upper() for tag in value})
